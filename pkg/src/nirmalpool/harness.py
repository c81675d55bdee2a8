"""Experiment harness: trains the benchmark network with either pooling
variant, evaluates on held-out data, and emits JSON reports plus CSV summary
rows suitable for cross-run comparison tables.
"""

import csv
import hashlib
import json
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import data as datasets
from . import nn, optim, pooling

DATA_ROOT_ENV = "NIRMALPOOL_DATA_ROOT"
CSV_HEADER = ["dataset", "variant", "seed", "epochs", "test_loss", "test_accuracy"]

MNIST_FILES = {
    "mnist_digits": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte",
                     "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
    "mnist_fashion": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte",
                      "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}
CIFAR_TRAIN_FILES = [f"data_batch_{i}.bin" for i in range(1, 6)]
CIFAR_TEST_FILES = ["test_batch.bin"]


class DataPathError(FileNotFoundError):
    """Dataset files missing from the configured root."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int):
        super().__init__(f"non-finite loss at epoch {epoch}")
        self.epoch = epoch


@dataclass
class RunConfig:
    dataset: str = "mnist_digits"   # mnist_digits | mnist_fashion | cifar10 | synthetic
    pooling_variant: str = "nirmal"  # nirmal | max2x2
    activation_placement: str | None = None  # None -> variant default
    epochs: int = 10
    batch_size: int = 64
    val_fraction: float = 0.1
    seed: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    pool_targets: tuple[tuple[int, int] | None, ...] | None = None  # None -> exact halving
    train_limit: int | None = None  # desk-scale subsampling
    test_limit: int | None = None
    data_root: str | None = None
    output_dir: str = "."

    def resolved_placement(self) -> str:
        return self.activation_placement or nn.default_placement(self.pooling_variant)

    def fingerprint(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float


@dataclass
class RunReport:
    dataset: str
    variant: str
    seed: int
    fingerprint: str
    epochs: list[EpochMetrics]
    test_loss: float
    test_accuracy: float
    wall_clock_seconds: float
    config: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=str)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        raw = json.loads(text)
        raw["epochs"] = [EpochMetrics(**e) for e in raw["epochs"]]
        return cls(**raw)


def _data_root(config: RunConfig) -> Path:
    root = config.data_root or os.environ.get(DATA_ROOT_ENV)
    if root is None:
        raise DataPathError(
            f"no data root configured; set --data-root or ${DATA_ROOT_ENV}")
    return Path(root)


def load_dataset_pair(config: RunConfig) -> tuple[datasets.Dataset, datasets.Dataset]:
    """(train, test) datasets for the configured benchmark."""
    if config.dataset == "synthetic":
        return (datasets.synthetic_two_class(512, seed=config.seed, name="synthetic"),
                datasets.synthetic_two_class(128, seed=config.seed + 1, name="synthetic"))
    root = _data_root(config)
    if config.dataset in MNIST_FILES:
        sub = root / config.dataset
        names = MNIST_FILES[config.dataset]
        paths = [sub / n for n in names]
        missing = [p for p in paths if not p.exists()]
        if missing:
            raise DataPathError(
                f"missing {config.dataset} files: {[str(p) for p in missing]}; "
                f"place the four IDX files under {sub}")
        return (datasets.load_mnist(paths[0], paths[1], config.dataset),
                datasets.load_mnist(paths[2], paths[3], config.dataset))
    if config.dataset == "cifar10":
        sub = root / "cifar10"
        train_paths = [sub / n for n in CIFAR_TRAIN_FILES]
        test_paths = [sub / n for n in CIFAR_TEST_FILES]
        missing = [p for p in train_paths + test_paths if not p.exists()]
        if missing:
            raise DataPathError(
                f"missing cifar10 files: {[str(p) for p in missing]}; "
                f"place the binary batches under {sub}")
        return (datasets.load_cifar10(train_paths, "cifar10"),
                datasets.load_cifar10(test_paths, "cifar10"))
    raise ValueError(f"unknown dataset {config.dataset!r}")


def build_model_spec(config: RunConfig, input_hw: tuple[int, int]) -> nn.ModelSpec:
    """Benchmark architecture sized for the dataset; a compact variant for
    the synthetic toy set, where 8x8 inputs cannot feed two pooling stages."""
    if config.dataset == "synthetic":
        return nn.ModelSpec(pooling_variant=config.pooling_variant,
                            activation_placement=config.resolved_placement(),
                            conv_filters=(8,), dense_units=(32, 2),
                            pool_targets=(config.pool_targets or (None,))[:1])
    return nn.ModelSpec(pooling_variant=config.pooling_variant,
                        activation_placement=config.resolved_placement(),
                        conv_filters=(32, 64), dense_units=(128, 10),
                        pool_targets=config.pool_targets or (None, None))


def evaluate(spec: nn.ModelSpec, params: dict, dataset: datasets.Dataset,
             batch_size: int) -> tuple[float, float]:
    """Mean loss and accuracy over a dataset."""
    total_loss = 0.0
    correct = 0
    for start in range(0, len(dataset), batch_size):
        images = dataset.images[start:start + batch_size]
        labels = dataset.labels[start:start + batch_size]
        logits, _ = nn.model_forward(spec, params, images)
        loss, _ = nn.softmax_cross_entropy(logits, labels)
        total_loss += loss * len(labels)
        correct += int((logits.argmax(axis=1) == labels).sum())
    return total_loss / len(dataset), correct / len(dataset)


def train(config: RunConfig, verbose: bool = False) -> RunReport:
    """Train per the configured protocol and evaluate on the test set."""
    start_time = time.time()
    train_full, test_set = load_dataset_pair(config)
    if config.train_limit is not None:
        train_full = train_full.subset(np.arange(min(config.train_limit, len(train_full))))
    if config.test_limit is not None:
        test_set = test_set.subset(np.arange(min(config.test_limit, len(test_set))))

    split = datasets.split_train_val(train_full, config.val_fraction, config.seed)
    h, w, c = train_full.images.shape[1:]
    spec = build_model_spec(config, (h, w))
    params = nn.init_params(spec, (1, h, w, c), seed=config.seed)
    state = optim.init_adam(params, lr=config.lr, beta1=config.beta1,
                            beta2=config.beta2, epsilon=config.epsilon)

    epoch_metrics: list[EpochMetrics] = []
    for epoch in range(config.epochs):
        running_loss = 0.0
        running_correct = 0
        for images, labels in datasets.batches(split.train, config.batch_size,
                                               config.seed, epoch):
            logits, cache = nn.model_forward(spec, params, images)
            loss, grad_logits = nn.softmax_cross_entropy(logits, labels)
            if not np.isfinite(loss):
                raise DivergenceError(epoch)
            grads = nn.model_backward(spec, params, cache, grad_logits)
            params = optim.adam_step(params, grads, state)
            running_loss += loss * len(labels)
            running_correct += int((logits.argmax(axis=1) == labels).sum())
        val_loss, val_acc = evaluate(spec, params, split.val, config.batch_size)
        metrics = EpochMetrics(epoch=epoch,
                               train_loss=running_loss / len(split.train),
                               train_accuracy=running_correct / len(split.train),
                               val_loss=val_loss, val_accuracy=val_acc)
        epoch_metrics.append(metrics)
        if verbose:
            print(f"epoch {epoch}: train loss {metrics.train_loss:.4f} "
                  f"acc {metrics.train_accuracy:.4f} | val loss {val_loss:.4f} "
                  f"acc {val_acc:.4f}")

    test_loss, test_acc = evaluate(spec, params, test_set, config.batch_size)
    return RunReport(dataset=config.dataset, variant=config.pooling_variant,
                     seed=config.seed, fingerprint=config.fingerprint(),
                     epochs=epoch_metrics, test_loss=test_loss, test_accuracy=test_acc,
                     wall_clock_seconds=time.time() - start_time,
                     config=asdict(config))


def write_report(report: RunReport, output_dir) -> Path:
    """Write `<name>.report.json` and append a row to `results.csv`."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = f"{report.dataset}_{report.variant}_seed{report.seed}"
    json_path = out / f"{name}.report.json"
    json_path.write_text(report.to_json())
    csv_path = out / "results.csv"
    new_file = not csv_path.exists()
    with open(csv_path, "a", newline="") as f:
        writer = csv.writer(f)
        if new_file:
            writer.writerow(CSV_HEADER)
        writer.writerow([report.dataset, report.variant, report.seed,
                         len(report.epochs), f"{report.test_loss:.6f}",
                         f"{report.test_accuracy:.6f}"])
    return json_path


def compare(config: RunConfig, verbose: bool = False) -> dict[str, RunReport]:
    """Run both pooling variants under identical seed/config."""
    reports = {}
    for variant in ("max2x2", "nirmal"):
        cfg = RunConfig(**{**asdict(config),
                           "pooling_variant": variant,
                           "activation_placement": None,
                           "pool_targets": config.pool_targets})
        reports[variant] = train(cfg, verbose=verbose)
    return reports


def comparison_table(reports: dict[str, RunReport]) -> str:
    lines = [f"{'variant':<10} {'loss':>10} {'accuracy':>10}"]
    for variant, rep in reports.items():
        lines.append(f"{variant:<10} {rep.test_loss:>10.4f} {rep.test_accuracy:>10.4f}")
    return "\n".join(lines)


@dataclass
class PoolCheckRow:
    h_in: int
    target: int
    window: int
    stride: int
    achieved: int
    deviates: bool


def poolcheck(max_dim: int = 64) -> list[PoolCheckRow]:
    """Sweep adaptive parameter derivation over (input, target) pairs and
    flag where the achieved output size deviates from the request."""
    rows = []
    for h_in in range(1, max_dim + 1):
        for target in range(1, max_dim + 1):
            p = pooling.compute_pool_params(h_in, h_in, target, target)
            rows.append(PoolCheckRow(h_in=h_in, target=target, window=p.window_h,
                                     stride=p.stride_h, achieved=p.out_h,
                                     deviates=p.out_h != target))
    return rows
