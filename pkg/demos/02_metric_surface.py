"""Show where accuracy and F1 mislead on heavily imbalanced inspection data.

The analytic surface evaluates each metric for every combination of slip
rate s and volume reduction v at a fixed defect prevalence, with no sampling
noise.  At sub-percent prevalence, huge regions of the (s, v) plane score
near-perfect accuracy while the business case is dead.
"""

from falsecall import TargetSpec, analytic_metrics, metric_surface

prevalence = 0.008
targets = TargetSpec(s_target=0.01, v_target=0.40)

surface = metric_surface(prevalence, resolution=5, targets=targets)
print(f"prevalence {prevalence:.1%}, grid over s (rows) x v (columns)\n")
header = "         " + "  ".join(f"v={v:.2f}" for v in surface.v_values)
for name, grid in (("accuracy", surface.accuracy), ("f1", surface.f1),
                   ("cv", surface.cv)):
    print(f"{name}:")
    print(header)
    for i, s in enumerate(surface.s_values):
        cells = "  ".join(f"{grid[i, j]:+.3f}" for j in range(len(surface.v_values)))
        print(f"  s={s:.2f} {cells}")
    print()

# The reject-nothing gate: forwards every board, slips every defect.
accuracy, f1, cv = analytic_metrics(prevalence, s=1.0, v=1.0, targets=targets)
print(f"reject-nothing gate: accuracy {accuracy:.3f}, f1 {f1:.1f}, cv {cv:+.2f}")
print("  accuracy alone would call this gate excellent.\n")

# A gate that misses the slip target by a hair but keeps volume perfect.
accuracy, f1, cv = analytic_metrics(0.01, s=0.011, v=1.0, targets=targets)
print(f"s=1.1%, v=100% at 1% prevalence: f1 {f1:.4f} yet cv {cv:+.4f}")
print("  F1 of ~0.995 can coexist with a failed slip requirement; cv makes")
print("  the miss visible as a negative value.")
