"""Data cleansing: per-identity Mahalanobis quantile filtering, pose keypoint
normalization, and pose validity screening.

Keypoints follow the 18-point skeleton ordering in which index 1 is the Neck
and index 11 is the Left Hip; those two joints anchor pose normalization
(Neck at the origin, Neck-LHip distance scaled to 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import FeatureSet, fit_identity_stats, mahalanobis_many
from .errors import DegeneratePose, DimensionMismatch, MissingAnchor

NECK = 1
LEFT_HIP = 11
NOSE = 0
RIGHT_HIP = 8

# limb segments checked for plausible length, as (joint, joint) index pairs
LIMB_SEGMENTS = (
    (1, 2), (2, 3), (3, 4),        # right arm
    (1, 5), (5, 6), (6, 7),        # left arm
    (1, 8), (8, 9), (9, 10),       # right leg
    (1, 11), (11, 12), (12, 13),   # left leg
    (0, 1),                        # head
)

# left/right segment pairs checked for symmetric length
SYMMETRY_PAIRS = (
    ((2, 3), (5, 6)),     # upper arms
    ((3, 4), (6, 7)),     # forearms
    ((8, 9), (11, 12)),   # thighs
    ((9, 10), (12, 13)),  # shins
)


@dataclass(frozen=True)
class PoseRecord:
    """18 keypoints (x, y, confidence) for one sample."""

    sample: str
    keypoints: np.ndarray

    def __post_init__(self):
        kp = np.asarray(self.keypoints, dtype=np.float64)
        if kp.shape != (18, 3):
            raise DimensionMismatch(f"keypoints must be 18 x 3, got {kp.shape}")
        object.__setattr__(self, "keypoints", kp)


@dataclass(frozen=True)
class PoseValidConfig:
    """Thresholds for the pose validity screen.

    The screening categories come from the cleansing procedure; the numeric
    defaults are artifact decisions (documented in the README) since no
    published values exist.
    """

    confidence_floor: float = 0.3
    min_visible: int = 6
    limb_min: float = 0.05       # body-heights
    limb_max: float = 3.0
    symmetry_ratio: float = 3.0  # max left/right length ratio
    check_limbs: bool = True
    check_symmetry: bool = True
    check_orientation: bool = True


@dataclass(frozen=True)
class CleanseReport:
    """Partition of the input into kept and removed samples.

    ``removed`` holds (sample index, reason) pairs; reasons are
    "OutlierLow", "OutlierHigh", "PoseInvalid(...)". Identities too small
    for covariance fitting are kept wholesale and listed in
    ``too_few_ids``. ``per_id_bounds`` maps id -> (Q_p, Q_{1-p}).
    """

    n: int
    kept: np.ndarray
    removed: tuple[tuple[int, str], ...]
    per_id_bounds: dict = field(default_factory=dict)
    too_few_ids: tuple = ()

    def __post_init__(self):
        kept = np.asarray(self.kept, dtype=np.int64)
        object.__setattr__(self, "kept", kept)
        if kept.size + len(self.removed) != self.n:
            raise ValueError("kept and removed must partition the input")


def outlier_filter(
    fset: FeatureSet,
    p: float,
    min_samples: int = 10,
    epsilon_scale: float = 1e-6,
) -> CleanseReport:
    """Drop per-identity Mahalanobis-distance outliers.

    For every identity with at least ``min_samples`` samples, keep the
    samples whose distance falls inside [Q_p, Q_{1-p}] of the identity's
    empirical distance distribution (linear-interpolation quantiles).
    Smaller identities are kept untouched and reported.
    """
    if not (0.0 <= p < 0.5):
        raise ValueError(f"p must be in [0, 0.5), got {p}")
    kept: list[int] = []
    removed: list[tuple[int, str]] = []
    bounds: dict = {}
    too_few: list = []
    for lab in np.unique(fset.ids):
        rows = np.flatnonzero(fset.ids == lab)
        if rows.size < min_samples:
            too_few.append(int(lab))
            kept.extend(int(r) for r in rows)
            continue
        stats = fit_identity_stats(fset, lab)
        dis = mahalanobis_many(fset.features[rows], stats, epsilon_scale)
        lo, hi = np.quantile(dis, [p, 1.0 - p], method="linear")
        bounds[int(lab)] = (float(lo), float(hi))
        for r, d in zip(rows, dis):
            if d < lo:
                removed.append((int(r), "OutlierLow"))
            elif d > hi:
                removed.append((int(r), "OutlierHigh"))
            else:
                kept.append(int(r))
    return CleanseReport(
        n=fset.n,
        kept=np.sort(np.asarray(kept, dtype=np.int64)),
        removed=tuple(sorted(removed)),
        per_id_bounds=bounds,
        too_few_ids=tuple(too_few),
    )


def normalize_pose(pose: PoseRecord, confidence_floor: float = 0.3) -> PoseRecord:
    """Translate the Neck to the origin and scale by the Neck-LHip distance.

    Confidences pass through unchanged.
    """
    kp = pose.keypoints
    if kp[NECK, 2] < confidence_floor or kp[LEFT_HIP, 2] < confidence_floor:
        raise MissingAnchor(f"{pose.sample}: Neck/LHip confidence below {confidence_floor}")
    h = float(np.linalg.norm(kp[NECK, :2] - kp[LEFT_HIP, :2]))
    if h <= 1e-6:
        raise DegeneratePose(f"{pose.sample}: Neck-LHip distance {h} too small")
    out = kp.copy()
    out[:, :2] = (kp[:, :2] - kp[NECK, :2]) / h
    return PoseRecord(pose.sample, out)


def _segment_length(kp: np.ndarray, seg: tuple[int, int]) -> float:
    a, b = seg
    return float(np.linalg.norm(kp[a, :2] - kp[b, :2]))


def _visible(kp: np.ndarray, idx: int, floor: float) -> bool:
    return kp[idx, 2] >= floor

def pose_valid(pose: PoseRecord, thresholds: PoseValidConfig = PoseValidConfig()) -> tuple[bool, list[str]]:
    """Screen a pose for anatomical plausibility; returns (valid, reasons).

    Checks (each only on keypoints above the confidence floor): minimum
    visible keypoint count, anchor presence, limb segment lengths in
    body-height units, left/right limb symmetry, and head-above-hips
    orientation (image y axis pointing down). Invalidity is a result, not
    an error.
    """
    reasons: list[str] = []
    kp = pose.keypoints
    floor = thresholds.confidence_floor
    n_visible = int(np.sum(kp[:, 2] >= floor))
    if n_visible < thresholds.min_visible:
        return False, ["MissingKeypoints"]
    if not (_visible(kp, NECK, floor) and _visible(kp, LEFT_HIP, floor)):
        return False, ["MissingAnchor"]
    try:
        norm = normalize_pose(pose, floor)
    except DegeneratePose:
        return False, ["DegeneratePose"]
    nkp = norm.keypoints

    if thresholds.check_limbs:
        for seg in LIMB_SEGMENTS:
            if _visible(nkp, seg[0], floor) and _visible(nkp, seg[1], floor):
                length = _segment_length(nkp, seg)
                if not (thresholds.limb_min <= length <= thresholds.limb_max):
                    reasons.append(f"LimbLengthOutOfRange({seg[0]}-{seg[1]})")
    if thresholds.check_symmetry:
        for right, left in SYMMETRY_PAIRS:
            if all(_visible(nkp, j, floor) for j in (*right, *left)):
                lr = _segment_length(nkp, right)
                ll = _segment_length(nkp, left)
                if lr > 0 and ll > 0:
                    ratio = max(lr / ll, ll / lr)
                    if ratio > thresholds.symmetry_ratio:
                        reasons.append(f"AsymmetricLimbs({right}-{left})")
    if thresholds.check_orientation and _visible(nkp, NOSE, floor):
        hips = [nkp[j, 1] for j in (RIGHT_HIP, LEFT_HIP) if _visible(nkp, j, floor)]
        if hips and nkp[NOSE, 1] >= float(np.mean(hips)):
            reasons.append("HeadBelowHips")
    return (not reasons), reasons


def build_manifests(
    fset: FeatureSet,
    poses: list[PoseRecord],
    p: float,
    thresholds: PoseValidConfig = PoseValidConfig(),
    min_samples: int = 10,
) -> tuple[CleanseReport, CleanseReport]:
    """Reference/target manifests: (outlier filter only, outlier filter AND
    pose validity).

    Poses align to the feature set by sample name; a sample without a pose
    record fails the validity screen.
    """
    if fset.names is None:
        raise ValueError("build_manifests requires a FeatureSet with sample names")
    s_ref = outlier_filter(fset, p, min_samples=min_samples)
    by_name = {pose.sample: pose for pose in poses}

    kept: list[int] = []
    removed = list(s_ref.removed)
    for i in s_ref.kept:
        pose = by_name.get(fset.names[i])
        if pose is None:
            removed.append((int(i), "PoseInvalid(NoPose)"))
            continue
        ok, reasons = pose_valid(pose, thresholds)
        if ok:
            kept.append(int(i))
        else:
            removed.append((int(i), f"PoseInvalid({','.join(reasons)})"))
    s_trg = CleanseReport(
        n=fset.n,
        kept=np.asarray(sorted(kept), dtype=np.int64),
        removed=tuple(sorted(removed)),
        per_id_bounds=dict(s_ref.per_id_bounds),
        too_few_ids=s_ref.too_few_ids,
    )
    return s_ref, s_trg
