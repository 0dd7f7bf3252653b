"""A tour of the tensor core: graphs, gradients, and the optimizer.

Builds a small computation, checks one analytic gradient against central
finite differences, then fits a toy convolutional regression with Adam.

Run:  python demos/03_autodiff.py
"""

import numpy as np

import radarpose.tensor as T
from radarpose.optim import Adam
from radarpose.tensor import GradTape, Tensor

rng = np.random.default_rng(0)

# --- a tiny graph and its tape -----------------------------------------
x = Tensor(rng.normal(size=(3, 3)), requires_grad=True)
w = Tensor(rng.normal(size=(3, 3)), requires_grad=True)
out = T.tsum(T.sigmoid(T.matmul(x, w)))
tape = GradTape.trace(out)
print(f"graph has {len(tape.nodes)} nodes; ops on the tape:",
      [n.op for n in tape.nodes if n.op != "leaf"])
out.backward()

# finite-difference spot check of dout/dw[0, 0]
h = 1e-6
w.data[0, 0] += h
up = float(T.tsum(T.sigmoid(T.matmul(x, w))).data)
w.data[0, 0] -= 2 * h
dn = float(T.tsum(T.sigmoid(T.matmul(x, w))).data)
w.data[0, 0] += h
fd = (up - dn) / (2 * h)
print(f"dL/dw[0,0]: analytic {w.grad[0, 0]:+.8f}  finite-diff {fd:+.8f}")

# --- fit a 3x3 convolution to a known filter ---------------------------
true_w = np.zeros((1, 1, 3, 3))
true_w[0, 0] = [[0, -1, 0], [-1, 4, -1], [0, -1, 0]]  # a Laplacian
imgs = rng.normal(size=(16, 1, 12, 12)).astype(np.float64)
with np.errstate(all="ignore"):
    target = np.stack([
        T.conv2d(Tensor(im), Tensor(true_w), padding=1).data for im in imgs
    ])

w_fit = Tensor(rng.normal(scale=0.1, size=(1, 1, 3, 3)), requires_grad=True)
opt = Adam({"w": w_fit}, lr=0.05)
for step in range(120):
    pred = T.conv2d(Tensor(imgs), w_fit, padding=1)
    err = pred - Tensor(target)
    loss = T.tmean(err * err)
    opt.zero_grad()
    loss.backward()
    opt.step()
    if step % 30 == 0 or step == 119:
        print(f"step {step:3d}  mse {float(loss.data):.6f}")

print("recovered kernel:")
print(np.round(w_fit.data[0, 0], 2))
