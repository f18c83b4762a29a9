"""Reference operating preset and recorded calibration figures.

The pipeline was calibrated against a large geotagged corpus that cannot be
redistributed.  This module keeps the operating point from that calibration
as a named preset, plus the recorded evaluation figures.  The figures are
scale/direction anchors for sanity checks; the synthetic fixture corpus makes
no attempt to match them.
"""

from __future__ import annotations

from dataclasses import replace

from .config import ClassifierSettings, PipelineConfig

# decision threshold from the original calibration; classify uses score >= t
REFERENCE_THRESHOLD = 0.623

REFERENCE_CLASSIFIER = ClassifierSettings(
    orders=(1, 2, 3),
    buckets=1 << 21,
    dim=10,
    epochs=5,
    learning_rate=0.1,
    threshold=REFERENCE_THRESHOLD,
    k_folds=10,
)

# evaluation figures recorded at the reference operating point
CALIBRATION_FIGURES = {
    "baseline_f1": 0.85,
    "baseline_auc": 0.89,
    "post_loop_f1": 0.86,
    "post_loop_auc": 0.90,
    "mean_label_confidence": 0.92,
    "category_ratio_grand_mean": 3.6,
    "volume_bucket_spearman_max": 0.99,
}


def apply_reference(cfg: PipelineConfig) -> PipelineConfig:
    """Swap in the reference classifier settings, keeping everything else."""
    return replace(cfg, classifier=REFERENCE_CLASSIFIER)
