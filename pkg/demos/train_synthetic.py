"""Train both pooling variants on the built-in synthetic dataset and print
a side-by-side comparison. Runs in a few seconds with no data files."""

from nirmalpool import harness

config = harness.RunConfig(dataset="synthetic", epochs=3, seed=0, lr=0.003)
reports = harness.compare(config, verbose=True)
print()
print(harness.comparison_table(reports))
for variant, report in reports.items():
    path = harness.write_report(report, "demo_output")
    print(f"{variant}: report written to {path}")
