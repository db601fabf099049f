"""Walk through the requirement-aware metrics on a six-board toy example.

An inspection gate scores six AOI-flagged boards; two are true defects
(label 1) and four are false calls (label 0).  We compare what the standard
metrics and the business-linked metrics say about the same scores.
"""

import numpy as np

from falsecall import (TargetSpec, best_youden, confusion_counts,
                       constrained_auc_case, constrained_volume,
                       slip_rate, standard_metrics, sweep_thresholds,
                       volume_at_target_slip, volume_reduction, youden_index)

scores = np.array([0.9, 0.4, 0.8, 0.3, 0.2, 0.1])
labels = np.array([1, 1, 0, 0, 0, 0])
targets = TargetSpec(s_target=0.01, v_target=0.40)

print("boards:", list(zip(scores, labels)))
print(f"targets: slip <= {targets.s_target:.0%}, volume reduction >= "
      f"{targets.v_target:.0%}\n")

# A fixed threshold of 0.5 sends boards scoring >= 0.5 to manual inspection.
cc = confusion_counts(scores, labels, threshold=0.5)
m = standard_metrics(cc)
print(f"at threshold 0.5: tp={cc.tp} fp={cc.fp} tn={cc.tn} fn={cc.fn}")
print(f"  accuracy={m.accuracy:.3f}  f1={m.f1:.3f}  youden={youden_index(cc):.3f}")
print(f"  volume reduction v={volume_reduction(cc):.3f}  slip s={slip_rate(cc):.3f}")
print(f"  constrained volume cv={constrained_volume(cc, targets):.3f}")
print("  -> one defect slips (s=0.50), so cv goes negative even though")
print("     accuracy still looks decent.\n")

# Sweeping every achievable threshold shows what the gate could do.
curve = sweep_thresholds(scores, labels)
print("operating curve (threshold, v, s):")
for point in curve.points:
    print(f"  t={point.threshold:<5} v={point.v:.2f} s={point.s:.2f}")

yj = best_youden(curve)
vats = volume_at_target_slip(curve, targets)
cauc, case = constrained_auc_case(curve, targets)
print(f"\nbest youden {yj.score:.2f} at t={yj.threshold}")
print(f"V@S {vats.value:.2f} at t={vats.threshold} "
      "(best volume with the slip target met)")
print(f"cAUC {cauc:.3f} (case {case}: the curve reaches the target zone)")
print("\nAt t=0.4 the gate removes 75% of false calls without slipping a")
print("single defect; that threshold, not 0.5, is the deployable choice.")
