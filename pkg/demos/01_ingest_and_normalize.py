# %% [markdown]
# # Reading meter data into daily curves
#
# Raw readings arrive as `household_id,timestamp,kwh` rows at 15-minute
# resolution. Ingestion groups them into household-days, keeps only complete
# days (96 slots), drops all-zero days and scales each day to unit sum so that
# curves compare by shape rather than by volume.

# %%
import io

import numpy as np

from loadnet.ingest import as_matrix, assemble_days, normalize_all, parse_readings, SkipReport

rows = ["household_id,timestamp,kwh"]
rng = np.random.default_rng(0)
for house in ("A", "B"):
    for day in ("2021-03-01", "2021-03-02"):
        for s in range(96):
            rows.append(f"{house},{day}T{s // 4:02d}:{15 * (s % 4):02d}:00,{rng.random():.4f}")
# one incomplete day, one all-zero day and one malformed row
rows += [f"C,2021-03-01T{h:02d}:00:00,0.3" for h in range(10)]
rows += [f"D,2021-03-01T{s // 4:02d}:{15 * (s % 4):02d}:00,0" for s in range(96)]
rows.append("E,not-a-time,1.0")

readings, problems = parse_readings(io.BytesIO("\n".join(rows).encode()))
print(f"{len(readings)} readings parsed, {len(problems)} row problem(s):")
for p in problems:
    print("   ", p)

# %% [markdown]
# Assembly reports what it skipped; normalization adds the zero days it drops.

# %%
curves, report = assemble_days(readings)
normed = normalize_all(curves, report)
print(report.to_json())
ids, X = as_matrix(normed)
print("matrix", X.shape, "row sums", np.round(X.sum(axis=1), 12))
