"""Sharp RD analysis under local randomization, end to end.

Simulates an election-style design: the running variable is a margin of
victory, the outcome responds to winning, and a predetermined covariate
tracks the score outside a small window around the cutoff.  The workflow
is the one the library is built around:

  1. pick the window from covariate balance alone (never the outcome),
  2. run finite-sample (Fisherian) and large-sample inference inside it,
  3. invert constant-effect tests for a confidence interval,
  4. falsify: density check, placebo cutoffs, window sensitivity.
"""

import numpy as np

import rdlocal as rd

# A design with a true effect of 8.0 and potential outcomes flat within
# +/- 0.75 of the cutoff; further out, score and outcome are related, which
# is exactly what the window selector must detect.
sample = rd.gen_sharp(n=1500, window_flat_radius=0.75, slopes=(12.0, 12.0),
                      effect=8.0, noise_sd=5.0, score_range=10.0,
                      covariate_slopes=(3.0, 3.0), covariate_noise_sd=1.0,
                      seed=20)

# -- step 1: window selection from the covariate only ----------------------
scan = rd.scan(sample, covariates=["z"], step=rd.by_obs(2), alpha_star=0.15,
               n_sims=1000, seed=101, n_windows=40)
print(scan.to_frame().tail(8).to_string(index=False, float_format="%.3f"))
assert scan.selected is not None
w0 = scan.selected
print(f"\nselected window: [{w0.lo:.3f}, {w0.hi:.3f}] "
      f"(true flat radius 0.75)\n")

# -- step 2: outcome inference inside the selected window ------------------
sub = rd.in_window(sample, w0)
t = sub.treatment
fisher = rd.fisher_test(t, sub.outcome, n_sims=2000, seed=202)
large = rd.neyman_test(t, sub.outcome)
print(f"difference in means : {large.estimate:.3f}  (truth 8.0)")
print(f"finite-sample p     : {fisher.p_value:.4f} ({fisher.method})")
print(f"large-sample p      : {large.p_value:.4f}")
print(f"large-sample 95% CI : [{large.ci[0]:.2f}, {large.ci[1]:.2f}]")
print(f"power at d = 4      : {rd.power(t, sub.outcome, d=4.0):.3f}")

# -- step 3: Fisherian interval by test inversion ---------------------------
grid = np.arange(0.0, 16.0001, 0.25)
ci = rd.invert_ci(t, sub.outcome, grid=grid, alpha=0.05, n_sims=1000,
                  seed=303)
print(f"inversion 95% CI    : [{ci.interval[0]:.2f}, {ci.interval[1]:.2f}] "
      f"(contiguous: {ci.contiguous})")

# -- step 4: falsification --------------------------------------------------
print(f"\nbinomial density p  : "
      f"{rd.binomial_density(w0.n_plus, w0.n, 0.5):.3f}")

placebos = rd.placebo_cutoffs(sample, 0.0, [3.0, -3.0],
                              half_length=w0.half_length, seed=404,
                              n_sims=1000)
print("\nplacebo cutoffs (same-side windows, effect should vanish):")
print(placebos[["cutoff", "statistic", "p_value", "n"]]
      .to_string(index=False, float_format="%.3f"))

shrunk = [w0.half_length, 0.8 * w0.half_length, 0.6 * w0.half_length]
sens = rd.window_sensitivity(sample, shrunk, w0=w0.half_length, seed=505,
                             n_sims=1000)
print("\nsensitivity to shrinking the window:")
print(sens.to_string(index=False, float_format="%.3f"))
