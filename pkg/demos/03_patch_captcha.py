"""Localized patch on a scaled-down webpage canvas.

The patch covers about 9% of a 96x54 canvas (the 224x224 center of a
1024x576 screenshot, scaled down); every pixel outside it is untouched.
"""
import numpy as np

from confusion_attack import AttackConfig, ObjectiveConfig, RectMask, attack, evaluate_image, make_mask, toy_model
from confusion_attack.toy import clean_toy_image

canvas = clean_toy_image(54, 96)
patch = RectMask(16, 32, 16, 32)
print(f"patch covers {make_mask(patch, 54, 96).active_fraction:.1%} of the canvas")

ensemble = [toy_model("toy-a"), toy_model("toy-b")]
obj = ObjectiveConfig(temperature=0.02)
result = attack(canvas, ensemble, AttackConfig(epsilon=1.0, eta=0.05, mask_geometry=patch, objective=obj))
changed = np.any(result.best_image != canvas, axis=0)
print("changed pixels lie inside the patch:", bool(np.all(make_mask(patch, 54, 96).data[changed] == 1)))
for r in evaluate_image(ensemble, canvas, result.best_image, obj, seed=0, epsilon=1.0):
    print(f"{r.model_id}: ECR {r.ecr:.3f}")
