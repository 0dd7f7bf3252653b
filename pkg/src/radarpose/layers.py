"""Layer primitives for the pose network: modules, convs, norm, blocks.

Weights use uniform fan-in initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
drawn from an explicit Generator so model construction is seedable. Biases
start at zero.
"""

from __future__ import annotations

from typing import Dict, Iterator, Optional, Tuple

import numpy as np

from . import tensor as T
from .tensor import Tensor

__all__ = ["Module", "Conv2d", "Conv3d", "BatchNorm3d", "PReLU", "BasicBlock3d", "BasicBlock2d"]


class Module:
    """Minimal module tree with named parameters and buffers."""

    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_buffers", {})
        object.__setattr__(self, "_modules", {})
        object.__setattr__(self, "training", True)

    def __setattr__(self, name, value):
        if isinstance(value, Tensor) and value.requires_grad:
            self._params[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        object.__setattr__(self, name, value)

    def register_buffer(self, name: str, value: np.ndarray) -> None:
        self._buffers[name] = value
        object.__setattr__(self, name, value)

    def named_parameters(self, prefix: str = "") -> Dict[str, Tensor]:
        out = {}
        for name, p in self._params.items():
            out[prefix + name] = p
        for name, m in self._modules.items():
            out.update(m.named_parameters(prefix + name + "."))
        return out

    def named_buffers(self, prefix: str = "") -> Dict[str, np.ndarray]:
        out = {}
        for name, b in self._buffers.items():
            out[prefix + name] = b
        for name, m in self._modules.items():
            out.update(m.named_buffers(prefix + name + "."))
        return out

    def train(self, mode: bool = True) -> "Module":
        object.__setattr__(self, "training", mode)
        for m in self._modules.values():
            m.train(mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def load_state(self, state: Dict[str, np.ndarray]) -> None:
        """Load parameter and buffer arrays by name (shapes must match)."""
        params = self.named_parameters()
        buffers = self.named_buffers()
        for name, arr in state.items():
            if name in params:
                dst = params[name].data
            elif name in buffers:
                dst = buffers[name]
            else:
                raise KeyError(f"unknown state entry {name!r}")
            if dst.shape != arr.shape:
                raise ValueError(f"state entry {name!r} has shape {arr.shape}, expected {dst.shape}")
            dst[...] = arr.astype(dst.dtype)
        missing = (set(params) | set(buffers)) - set(state)
        if missing:
            raise KeyError(f"state is missing entries: {sorted(missing)}")


def _uniform_fan_in(rng: np.random.Generator, shape, fan_in: int, dtype) -> Tensor:
    bound = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape).astype(dtype), requires_grad=True)


class Conv2d(Module):
    def __init__(self, c_in, c_out, kernel, stride=1, padding=0, bias=True, *, rng, dtype=np.float32):
        super().__init__()
        kernel = (kernel, kernel) if isinstance(kernel, int) else tuple(kernel)
        fan_in = c_in * int(np.prod(kernel))
        self.stride = stride
        self.padding = padding
        self.weight = _uniform_fan_in(rng, (c_out, c_in) + kernel, fan_in, dtype)
        self.bias = Tensor(np.zeros(c_out, dtype=dtype), requires_grad=True) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return T.conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class Conv3d(Module):
    def __init__(self, c_in, c_out, kernel, stride=1, padding=0, bias=True, *, rng, dtype=np.float32):
        super().__init__()
        kernel = (kernel, kernel, kernel) if isinstance(kernel, int) else tuple(kernel)
        fan_in = c_in * int(np.prod(kernel))
        self.stride = stride
        self.padding = padding
        self.weight = _uniform_fan_in(rng, (c_out, c_in) + kernel, fan_in, dtype)
        self.bias = Tensor(np.zeros(c_out, dtype=dtype), requires_grad=True) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return T.conv3d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class BatchNorm3d(Module):
    def __init__(self, channels, momentum=0.1, eps=1e-5, *, dtype=np.float32):
        super().__init__()
        self.momentum = momentum
        self.eps = eps
        self.gamma = Tensor(np.ones(channels, dtype=dtype), requires_grad=True)
        self.beta = Tensor(np.zeros(channels, dtype=dtype), requires_grad=True)
        # buffers share the parameter dtype so checkpoints round-trip exactly
        self.register_buffer("running_mean", np.zeros(channels, dtype=dtype))
        self.register_buffer("running_var", np.ones(channels, dtype=dtype))

    def forward(self, x: Tensor) -> Tensor:
        return T.batchnorm(
            x,
            self.gamma,
            self.beta,
            self.running_mean,
            self.running_var,
            channel_axis=1,
            momentum=self.momentum,
            eps=self.eps,
            training=self.training,
        )


class PReLU(Module):
    def __init__(self, init=0.25, *, dtype=np.float32):
        super().__init__()
        self.alpha = Tensor(np.asarray(init, dtype=dtype), requires_grad=True)

    def forward(self, x: Tensor) -> Tensor:
        return T.prelu(x, self.alpha)


class BasicBlock3d(Module):
    """ResNet basic block with 3x3x3 convs, batch norm, and ReLU."""

    def __init__(self, c_in, c_out, stride=1, bias=True, *, rng, dtype=np.float32):
        super().__init__()
        self.conv1 = Conv3d(c_in, c_out, 3, stride=stride, padding=1, bias=bias, rng=rng, dtype=dtype)
        self.bn1 = BatchNorm3d(c_out, dtype=dtype)
        self.conv2 = Conv3d(c_out, c_out, 3, stride=1, padding=1, bias=bias, rng=rng, dtype=dtype)
        self.bn2 = BatchNorm3d(c_out, dtype=dtype)
        if stride != 1 or c_in != c_out:
            self.down = Conv3d(c_in, c_out, 1, stride=stride, padding=0, bias=bias, rng=rng, dtype=dtype)
            self.down_bn = BatchNorm3d(c_out, dtype=dtype)
        else:
            self.down = None

    def forward(self, x: Tensor) -> Tensor:
        y = T.relu(self.bn1.forward(self.conv1.forward(x)))
        y = self.bn2.forward(self.conv2.forward(y))
        skip = x if self.down is None else self.down_bn.forward(self.down.forward(x))
        return T.relu(y + skip)


class BasicBlock2d(Module):
    """ResNet basic block with 3x3 convs and PReLU; no batch norm."""

    def __init__(self, c_in, c_out, bias=True, *, rng, dtype=np.float32):
        super().__init__()
        self.conv1 = Conv2d(c_in, c_out, 3, stride=1, padding=1, bias=bias, rng=rng, dtype=dtype)
        self.act1 = PReLU(dtype=dtype)
        self.conv2 = Conv2d(c_out, c_out, 3, stride=1, padding=1, bias=bias, rng=rng, dtype=dtype)
        self.act2 = PReLU(dtype=dtype)
        if c_in != c_out:
            self.down = Conv2d(c_in, c_out, 1, stride=1, padding=0, bias=bias, rng=rng, dtype=dtype)
        else:
            self.down = None

    def forward(self, x: Tensor) -> Tensor:
        y = self.conv2.forward(self.act1.forward(self.conv1.forward(x)))
        skip = x if self.down is None else self.down.forward(x)
        return self.act2.forward(y + skip)
