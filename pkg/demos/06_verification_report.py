# # Running the verification suites from Python
#
# The command line entry point is `sipduality run <scenario.json>`. The same
# machinery is available as functions; here a reduced scenario runs in a few
# seconds and the report is inspected directly.

from pathlib import Path

from sipduality.cli import export_tables, run
from sipduality.scenario import default_scenario

scenario = default_scenario(
    n_max=20,
    convergence=[10, 15, 20],
    mc_samples=20_000,
    gillespie_replicas=2_000,
    thresholds={"theorem": 1e-3, "transform": 1e-3},
)
report = run(scenario)

for rec in report.records:
    print(f"{'PASS' if rec.passed else 'FAIL'} {rec.suite}/{rec.name}: {rec.statistic:.2e} ({rec.comparison} {rec.threshold:.0e})")

print()
print(report.tables["convergence"].to_csv())

out = Path("sipduality-out") / "demo"
for path in export_tables(report, out):
    print("wrote", path)
