"""Structural statistics and log-normal strength fits of a value-added network."""

# %% Build an international network from a toy table
import numpy as np

from ivanet import build_gvan, build_ivan, build_leontief, strength_fit, structural_report
from ivanet.leontief import threshold_top_k
from ivanet.metrics import lognormal_pdf
from ivanet.toy import toy_table

table = toy_table(10, 4, blocks=2, seed=2)
ivan = build_ivan(build_gvan(build_leontief(table)), table.n_sectors)

# %% Dense original versus a network cut to its strongest links
report = structural_report(ivan)
cut = threshold_top_k(ivan, 150)
cut_report = structural_report(cut.subnetwork(np.flatnonzero(cut.weights.any(0) | cut.weights.any(1))))
for key in ("density", "reciprocity", "clustering_coefficient", "diameter", "average_path_length", "assortativity"):
    print(f"{key:24s} {getattr(report, key):10.4f} {getattr(cut_report, key):10.4f}")

# %% Log-normal fit of in-strength, natural and base-10 logs
fit = strength_fit(ivan)
for base, f in fit.fits["in"].items():
    print(f"log base {base}: mu={f.mu:.3f} sigma={f.sigma:.3f}")
s, ccdf = fit.ccdf("in")
print("largest strengths and their CCDF:", list(zip(np.round(s[-3:], 1), ccdf[-3:])))
print("fitted density at the median:", lognormal_pdf(np.exp(fit.mu_in), fit.mu_in, fit.sigma_in))
