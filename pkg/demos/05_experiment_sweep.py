"""A small seeded sweep over cost parameters, with paired baseline runs.

Shows how consolidation degrades as the context-switching and upscaling
penalties grow, and how the utilization-only baseline model
underestimates both the node count and the latency.
"""

from sfcplace.harness import (CostSetting, ExperimentSpec, LoadSize,
                              emit_comparison_csv, emit_csv, run_experiment,
                              run_paired_comparison)

spec = ExperimentSpec(
    sizes=(LoadSize(20, 20),),
    cost_grid=(CostSetting(0.0, 0.0), CostSetting(0.4, 0.0),
               CostSetting(0.4, 1.75), CostSetting(0.8, 3.5)),
    iterations=20,
    seed=1,
)
result = run_experiment(spec)
print("sweep over (omega, kappa), 20 chains x 20 users, 20 seeds each:")
print(emit_csv(result))

paired = ExperimentSpec(sizes=(LoadSize(20, 20),),
                        cost_grid=(CostSetting(0.4, 1.75),),
                        iterations=20, seed=1, h=0.0)
sharing, sota = run_paired_comparison(paired)
print("same seeds under the sharing-aware and the baseline node model:")
print(emit_comparison_csv(sharing, sota))
