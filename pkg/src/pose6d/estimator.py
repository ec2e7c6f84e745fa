"""Scikit-learn style facade over the training and evaluation engines.

`PoseSequenceEstimator` exposes fit/predict/score with get_params/set_params,
so the pipeline composes with sklearn tooling (cloning, grid search over
temporal variants, etc.). Heavy lifting stays in `training` and `evaluation`.
"""

from __future__ import annotations

from pathlib import Path

from sklearn.base import BaseEstimator

from .data.records import Dataset, load_dataset
from .errors import InvalidInputError
from .evaluation import run_eval, scoring_triples
from .metrics import evaluate_dataset
from .network.checkpoint import model_from_checkpoint, save_checkpoint
from .network.config import EncoderConfig, toy_config
from .objects import ObjectRegistry, load_registry
from .training import TrainConfig, train
from .validation import check_fitted


def _as_dataset(data) -> Dataset:
    if isinstance(data, Dataset):
        return data
    return load_dataset(data)


def _default_registry(dataset: Dataset) -> ObjectRegistry:
    models_dir = dataset.models_dir()
    if not models_dir.is_dir():
        raise InvalidInputError(
            f"dataset {dataset.root} has no models/ directory; pass a registry explicitly")
    return load_registry(models_dir)


class PoseSequenceEstimator(BaseEstimator):
    """Fit a temporal pose network on a video dataset and predict per-frame poses.

    Parameters mirror the training recipe; `encoder_size` picks between the
    default architecture and the small desk-scale one.
    """

    def __init__(self, temporal_variant: str = "baseline_rnn", epochs: int = 100,
                 base_lr: float = 5e-4, weight_decay: float = 1e-5, batch_size: int = 4,
                 seed: int = 0, encoder_size: str = "toy", augment_enabled: bool = True,
                 serial: bool = False, work_dir: str | None = None):
        self.temporal_variant = temporal_variant
        self.epochs = epochs
        self.base_lr = base_lr
        self.weight_decay = weight_decay
        self.batch_size = batch_size
        self.seed = seed
        self.encoder_size = encoder_size
        self.augment_enabled = augment_enabled
        self.serial = serial
        self.work_dir = work_dir

    def _encoder_cfg(self) -> EncoderConfig:
        if self.encoder_size == "toy":
            return toy_config()
        if self.encoder_size == "default":
            return EncoderConfig()
        raise InvalidInputError(f"encoder_size must be 'toy' or 'default', got {self.encoder_size!r}")

    def _train_cfg(self) -> TrainConfig:
        from .data.augment import AugmentConfig
        return TrainConfig(
            base_lr=self.base_lr, weight_decay=self.weight_decay, epochs=self.epochs,
            batch_size=self.batch_size, seed=self.seed, temporal_variant=self.temporal_variant,
            serial=self.serial, augment=AugmentConfig(enabled=self.augment_enabled),
        )

    def fit(self, X, y=None, registry: ObjectRegistry | None = None):
        """Train on a dataset root or Dataset; y is ignored (gt lives in X)."""
        import tempfile

        dataset = _as_dataset(X)
        self.registry_ = registry or _default_registry(dataset)
        work_dir = Path(self.work_dir) if self.work_dir else Path(tempfile.mkdtemp(prefix="pose6d_"))
        result = train(self._train_cfg(), dataset, self.registry_, work_dir,
                       encoder_cfg=self._encoder_cfg())
        self.train_result_ = result
        self.history_ = result.history
        self.model_ = model_from_checkpoint(result.best_checkpoint,
                                            self.registry_.content_hash())
        return self

    def predict(self, X, video_ids=None) -> list:
        """PredictionRecords over eval clips of a dataset root or Dataset."""
        check_fitted(self)
        dataset = _as_dataset(X)
        return run_eval(self.model_, dataset, self.registry_, video_ids=video_ids)

    def score(self, X, y=None, video_ids=None) -> float:
        """Pooled ADD-S AUC in [0, 1] over the dataset's eval clips."""
        check_fitted(self)
        dataset = _as_dataset(X)
        records = self.predict(dataset, video_ids=video_ids)
        triples = scoring_triples(records, dataset)
        return evaluate_dataset(triples, self.registry_).all_row.add_s_auc

    def save(self, path) -> None:
        check_fitted(self)
        save_checkpoint(path, self.model_, self.registry_.content_hash(),
                        extra={"estimator_params": self.get_params()})

    def load(self, path, registry: ObjectRegistry) -> "PoseSequenceEstimator":
        """Attach a previously saved checkpoint instead of fitting."""
        self.registry_ = registry
        self.model_ = model_from_checkpoint(path, registry.content_hash())
        return self
