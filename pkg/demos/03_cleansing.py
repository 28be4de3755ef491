"""Data cleansing: statistical outlier removal and pose screening.

Plants a contaminating cluster inside one identity's samples and removes
it with the per-identity Mahalanobis quantile filter, then shows the pose
validity screen rejecting implausible skeletons.

Run:  python3 demos/03_cleansing.py
"""

import numpy as np

from featcent import (
    FeatureSet,
    PoseRecord,
    l2_normalize,
    outlier_filter,
    pose_valid,
)

# -- 1. plant-and-recover ---------------------------------------------------
rng = np.random.default_rng(42)
dim, sigma = 3, 0.1
center = rng.standard_normal(dim)
center /= np.linalg.norm(center)
offset = rng.standard_normal(dim)
offset -= (offset @ center) * center
offset *= 6 * sigma * np.sqrt(dim) / np.linalg.norm(offset)

clean = center + sigma * rng.standard_normal((1000, dim))
planted = (center + offset) + sigma * rng.standard_normal((50, dim))
fset = l2_normalize(FeatureSet(np.vstack([clean, planted]),
                               np.zeros(1050, dtype=np.int64)))

report = outlier_filter(fset, p=0.05)
removed = {i for i, _ in report.removed}
recall = sum(1 for i in removed if i >= 1000) / 50
loss = sum(1 for i in removed if i < 1000) / 1000
print(f"planted-outlier recall : {recall:.1%}")
print(f"clean-sample loss      : {loss:.1%}")
print(f"distance bounds (id 0) : [{report.per_id_bounds[0][0]:.3f}, "
      f"{report.per_id_bounds[0][1]:.3f}]\n")

# -- 2. pose screening ------------------------------------------------------
def standing_figure():
    pts = {
        0: (100, 40), 1: (100, 60),
        2: (85, 62), 3: (80, 90), 4: (78, 118),
        5: (115, 62), 6: (120, 90), 7: (122, 118),
        8: (90, 120), 9: (88, 160), 10: (87, 200),
        11: (110, 120), 12: (112, 160), 13: (113, 200),
        14: (95, 35), 15: (105, 35), 16: (90, 40), 17: (110, 40),
    }
    return np.array([[pts[i][0], pts[i][1], 0.9] for i in range(18)])

good = PoseRecord("standing", standing_figure())

stretched = standing_figure()
stretched[4, :2] = (2000, 80)          # wrist flung off-frame
flipped = standing_figure()
flipped[:, 1] = 240 - flipped[:, 1]    # upside down

for name, kp in (("plausible standing figure", good.keypoints),
                 ("stretched arm", stretched),
                 ("upside down", flipped)):
    ok, reasons = pose_valid(PoseRecord(name, kp))
    print(f"{name:<28}: {'valid' if ok else 'invalid ' + str(reasons)}")
