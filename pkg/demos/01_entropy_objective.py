"""Top-k entropy: what the attack maximizes.

Run with ``python demos/01_entropy_objective.py``.
"""
import math

import numpy as np

from confusion_attack import ObjectiveConfig, entropy_of_logits, model_entropy, toy_model, topk_truncate
from confusion_attack.toy import clean_toy_image

# %% Uniform logits sit at the ceiling, a dominant logit near zero.
print("50 equal logits:", entropy_of_logits(np.zeros(50)), "ln 50 =", math.log(50))
print("near one-hot   :", entropy_of_logits(np.array([1000.0, 0.0])))

# %% Truncation keeps the k largest logits before the softmax.
z = np.array([0.2, 3.0, -1.0, 2.5, 2.5])
print("top-3 of", z, "->", topk_truncate(z, 3))

# %% Temperature spreads or sharpens the truncated distribution.
model = toy_model("toy-a")
x = clean_toy_image()
for t in (0.02, 0.1, 1.0, 10.0):
    print(f"toy-a clean entropy at T={t:>5}: {model_entropy(model, x, '', ObjectiveConfig(temperature=t)):.4f}")
