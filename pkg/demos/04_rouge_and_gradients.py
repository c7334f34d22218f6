# ROUGE scoring and gradient verification
# =======================================
#
# Two self-contained corners of the package: the ROUGE-1/2/L scorer that
# drives both labeling and evaluation, and the finite-difference harness
# that keeps the hand-written backward pass honest.

import numpy as np

from attnsum import ModelDims, backward, grad_check, init_params, tokenize
from attnsum.rouge import rouge_1_text, rouge_2_text, rouge_l_text
from attnsum.training import (
    finite_difference_grads,
    instance_is_smooth,
    max_relative_error,
)
from attnsum.graph_extract import graphs_from_binary

# --- ROUGE --------------------------------------------------------------
candidate = "The storm closed the harbor on Monday."
reference = "A storm closed the harbor for two days on Monday."

print("tokens:", tokenize(candidate))
for name, scorer in (("ROUGE-1", rouge_1_text),
                     ("ROUGE-2", rouge_2_text),
                     ("ROUGE-L", rouge_l_text)):
    s = scorer(candidate, reference)
    print(f"{name}: P={s.precision:.3f} R={s.recall:.3f} F1={s.f1:.3f}")

# ROUGE-2 is what the oracle uses to pick label sentences: exact phrase
# overlap is rewarded much harder than bag-of-words overlap.
print("\nword salad vs true paraphrase (same unigrams, different order):")
salad = "harbor the closed storm the on Monday"
print(f"  salad  ROUGE-1 F1 = {rouge_1_text(salad, candidate).f1:.3f}")
print(f"  salad  ROUGE-2 F1 = {rouge_2_text(salad, candidate).f1:.3f}")

# --- gradients ----------------------------------------------------------
# backward() is a hand-derived reverse-mode pass; finite differences give
# an independent (slow, quadratic) second opinion. The comparison only
# makes sense away from relu kinks (where the loss is not differentiable
# and the two sides measure different one-sided objects), so the instance
# is redrawn until it is smooth.
dims = ModelDims(d=8, heads=2, d1=4, d2=4, dr=6)
rng = np.random.default_rng(3)
n = 5
params = init_params(dims, seed=5)
while True:
    upper = np.triu(rng.random((n, n)) < 0.5, k=1)
    graph = graphs_from_binary(np.stack([(upper | upper.T).astype(np.uint8)] * dims.heads))
    x = rng.standard_normal((n, dims.d))
    y = rng.integers(0, 2, size=n).astype(float)
    if instance_is_smooth(graph, x, params):
        break

loss, analytic = backward(graph, x, y, params)
numeric = finite_difference_grads(graph, x, y, params)
print(f"\nloss: {loss:.6f}")
print(f"max relative error analytic vs finite differences: "
      f"{max_relative_error(analytic, numeric):.3e}")

print("\ngrad_check over 5 seeds:")
for seed in range(5):
    print(f"  seed {seed}: {grad_check(seed=seed):.3e}")

# A corrupted gradient is glaring by comparison.
analytic.w1 = analytic.w1 + 0.05
print(f"\nafter corrupting w1 by +0.05: "
      f"{max_relative_error(analytic, numeric):.3e}  (detector fires)")
