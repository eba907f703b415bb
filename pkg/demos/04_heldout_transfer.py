"""Cross-family held-out transfer: optimize on toy-a + toy-b, score toy-c."""
from confusion_attack import AttackConfig, ObjectiveConfig, attack, evaluate_image, make_transfer_split, toy_model
from confusion_attack.toy import clean_toy_image

split = make_transfer_split([toy_model(m) for m in ("toy-a", "toy-b", "toy-c")])
print("train:", [m.model_id for m in split.train_models], "held out:", split.heldout_model.model_id)

x = clean_toy_image()
for epsilon in (1.0, 0.01):
    obj = ObjectiveConfig(temperature=0.02)
    result = attack(x, split.train_models, AttackConfig(epsilon=epsilon, eta=0.05, objective=obj))
    (rec,) = evaluate_image([split.heldout_model], x, result.best_image, obj, seed=0, epsilon=epsilon)
    print(f"eps={epsilon}: held-out ECR {rec.ecr:.3f}")
