"""Train the symptom classifier and watch early stopping.

Cluster labels computed from the ancestors of the demographic targets are a
deterministic function of the inputs, so the network learns them almost
perfectly. The epoch log shows training and validation loss side by side.
"""
import numpy as np

from cpdforge import SampleConfig, TrainConfig, encode, forward_sample, init_model, kmeans, predict_class, reference_net, train
from cpdforge.data import SplitSpec, split_indices

net = reference_net()
data = forward_sample(net, SampleConfig(n_samples=10_000, seed=5))
features = net.dag.names(net.dag.ancestors(["D", "V"]))
print("input variables:", features)

x = encode(data.select(features)).data
labels = kmeans(x, 8, seed=0).assignments
tr, va, te = split_indices(len(x), SplitSpec(seed=0))

model = init_model((x.shape[1], 128, 128, 64, 64, 32, 8), seed=0)
model, history = train(model, x[tr], labels[tr], x[va], labels[va], TrainConfig(epochs=16))

print("\nepoch  train loss  val loss  val acc")
for e, (a, b, c) in enumerate(zip(history.train_loss, history.val_loss, history.val_accuracy), start=1):
    print(f"{e:5d}  {a:10.4f}  {b:8.4f}  {c:7.4f}")
pred, score = predict_class(model, x[te])
print(f"\ntest accuracy {np.mean(pred == labels[te]):.4f}, prediction score min {score.min():.2f} max {score.max():.2f}")
