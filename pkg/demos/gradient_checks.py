"""Run the finite-difference gradient suite and print per-operation
maximum relative errors."""

from nirmalpool import gradcheck

for result in gradcheck.run_all(seed=0):
    status = "PASS" if result.passed else "FAIL"
    print(f"{result.name:<28} max rel err {result.max_rel_error:.3e}  {status}")
