"""The four network variants built from one shared layer stack.

All variants use the same trunk (two valid 5x5 convolutions with batchnorm,
ReLU and 2x2 max pooling) and the same fully connected tower (120 and 60
units with batchnorm and ReLU). They differ only in heads:

  FxNet      linear logits over the effect classes
  SetNet     tanh settings head (gain, tone; absent tone targets -1.0)
  MultiNet   both heads on the shared convolutional trunk
  SetNetCond settings head with a class embedding concatenated to the
             flattened trunk output
"""

import hashlib

import numpy as np

from ..errors import ConditioningError
from .layers import BatchNorm, Conv2D, Dense, Embedding, Flatten, MaxPool2x2, ReLU, Tanh


def _shape_chain(input_hw, conv_channels, ksize):
    h, w = input_hw
    chain = [(1, h, w)]
    for c in conv_channels:
        h, w = h - (ksize - 1), w - (ksize - 1)
        if h < 1 or w < 1:
            raise ValueError(f"input {input_hw} too small for the conv stack")
        chain.append((c, h, w))
        h, w = h // 2, w // 2
        if h < 1 or w < 1:
            raise ValueError(f"input {input_hw} too small for the pooling stack")
        chain.append((c, h, w))
    return chain, conv_channels[-1] * h * w


class _Stack:
    """A plain sequential run of layers."""

    def __init__(self, layers):
        self.layers = layers

    def forward(self, x, train=False):
        for layer in self.layers:
            x = layer.forward(x, train=train)
        return x

    def backward(self, dout):
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
        return dout

    def params(self):
        return [p for layer in self.layers for p in layer.params()]

    def buffers(self):
        return [b for layer in self.layers for b in layer.buffers()]


def _trunk(rng, arch, dtype):
    c1, c2 = arch["conv_channels"]
    k = arch["ksize"]
    return _Stack([
        Conv2D("conv1", 1, c1, k, rng, dtype, need_input_grad=False),
        BatchNorm("bn1", c1, dtype=dtype),
        ReLU(),
        MaxPool2x2(),
        Conv2D("conv2", c1, c2, k, rng, dtype),
        BatchNorm("bn2", c2, dtype=dtype),
        ReLU(),
        MaxPool2x2(),
        Flatten(),
    ])


def _fc_tower(rng, prefix, in_width, hidden, out_width, dtype):
    h1, h2 = hidden
    return _Stack([
        Dense(f"{prefix}fc1", in_width, h1, rng, dtype),
        BatchNorm(f"{prefix}bn3", h1, dtype=dtype),
        ReLU(),
        Dense(f"{prefix}fc2", h1, h2, rng, dtype),
        BatchNorm(f"{prefix}bn4", h2, dtype=dtype),
        ReLU(),
        Dense(f"{prefix}out", h2, out_width, rng, dtype),
    ])


DEFAULT_ARCH = {
    "input_hw": (87, 128),
    "conv_channels": (6, 12),
    "ksize": 5,
    "hidden": (120, 60),
    "n_classes": 13,
    "n_settings": 2,
    "emb_dim": 16,
}


class Network:
    """Common machinery: parameter listing, state dict, decision signature."""

    kind = None

    def __init__(self, seed=0, dtype=np.float32, **arch_overrides):
        arch = dict(DEFAULT_ARCH)
        arch.update(arch_overrides)
        self.arch = arch
        self.seed = seed
        self.dtype = np.dtype(dtype)
        self.shape_chain, self.flat_width = _shape_chain(
            tuple(arch["input_hw"]), tuple(arch["conv_channels"]), arch["ksize"])
        rng = np.random.default_rng(seed)
        self._build(rng, arch, self.dtype)

    def _stacks(self):
        raise NotImplementedError

    def params(self):
        return [p for s in self._stacks() for p in s.params()]

    def buffers(self):
        return [b for s in self._stacks() for b in s.buffers()]

    def zero_grad(self):
        for p in self.params():
            p.zero_grad()

    def state_dict(self):
        state = {p.name: p.data for p in self.params()}
        state.update({name: arr for name, arr in self.buffers()})
        return state

    def load_state_dict(self, state):
        own = self.state_dict()
        missing = set(own) - set(state)
        if missing:
            raise KeyError(f"state dict missing tensors: {sorted(missing)}")
        for name, arr in own.items():
            value = np.asarray(state[name])
            if value.shape != arr.shape:
                raise ValueError(f"{name}: shape {value.shape} != {arr.shape}")
            arr[...] = value

    def snapshot(self):
        return {name: arr.copy() for name, arr in self.state_dict().items()}

    def decision_signature(self):
        """Hash of all ReLU masks and pool winner codes from the last forward.

        Two forward passes with equal signatures took identical paths through
        every piecewise-linear switch, which is what makes a central finite
        difference across them valid.
        """
        h = hashlib.sha256()
        for s in self._stacks():
            for layer in getattr(s, "layers", [s]):
                if isinstance(layer, ReLU):
                    h.update(np.packbits(layer.last_mask).tobytes())
                elif isinstance(layer, MaxPool2x2):
                    h.update(layer.last_code.tobytes())
        return h.digest()

    def _check_features(self, x):
        h, w = self.arch["input_hw"]
        if x.ndim != 4 or x.shape[1] != 1 or x.shape[2:] != (h, w):
            raise ValueError(f"expected features [N,1,{h},{w}], got {x.shape}")


class FxNet(Network):
    kind = "fxnet"

    def _build(self, rng, arch, dtype):
        self.trunk = _trunk(rng, arch, dtype)
        self.head = _fc_tower(rng, "", self.flat_width, arch["hidden"],
                              arch["n_classes"], dtype)

    def _stacks(self):
        return [self.trunk, self.head]

    def forward(self, x, train=False):
        self._check_features(x)
        return self.head.forward(self.trunk.forward(x, train), train)

    def backward(self, dlogits):
        self.trunk.backward(self.head.backward(dlogits))


class SetNet(Network):
    kind = "setnet"

    def _build(self, rng, arch, dtype):
        self.trunk = _trunk(rng, arch, dtype)
        self.head = _fc_tower(rng, "", self.flat_width, arch["hidden"],
                              arch["n_settings"], dtype)
        self.out_act = Tanh()

    def _stacks(self):
        return [self.trunk, self.head]

    def forward(self, x, train=False):
        self._check_features(x)
        z = self.head.forward(self.trunk.forward(x, train), train)
        return self.out_act.forward(z, train)

    def backward(self, dsettings):
        self.trunk.backward(self.head.backward(self.out_act.backward(dsettings)))


class MultiNet(Network):
    """Classification and settings estimation on a shared convolutional trunk."""

    kind = "multinet"

    def _build(self, rng, arch, dtype):
        self.trunk = _trunk(rng, arch, dtype)
        self.head_cls = _fc_tower(rng, "cls_", self.flat_width, arch["hidden"],
                                  arch["n_classes"], dtype)
        self.head_set = _fc_tower(rng, "set_", self.flat_width, arch["hidden"],
                                  arch["n_settings"], dtype)
        self.out_act = Tanh()

    def _stacks(self):
        return [self.trunk, self.head_cls, self.head_set]

    def forward(self, x, train=False):
        self._check_features(x)
        flat = self.trunk.forward(x, train)
        logits = self.head_cls.forward(flat, train)
        settings = self.out_act.forward(self.head_set.forward(flat, train), train)
        return logits, settings

    def backward(self, dlogits, dsettings):
        dflat = self.head_cls.backward(dlogits)
        dflat = dflat + self.head_set.backward(self.out_act.backward(dsettings))
        self.trunk.backward(dflat)


class SetNetCond(Network):
    """Settings estimation conditioned on the effect class via an embedding."""

    kind = "setnetcond"

    def _build(self, rng, arch, dtype):
        self.trunk = _trunk(rng, arch, dtype)
        self.embedding = Embedding("emb", arch["n_classes"], arch["emb_dim"], rng, dtype)
        self.head = _fc_tower(rng, "", self.flat_width + arch["emb_dim"],
                              arch["hidden"], arch["n_settings"], dtype)
        self.out_act = Tanh()

    def _stacks(self):
        return [self.trunk, self.embedding, self.head]

    def forward(self, x, class_ids=None, train=False):
        self._check_features(x)
        if class_ids is None:
            raise ConditioningError("SetNetCond.forward requires class_ids")
        class_ids = np.asarray(class_ids)
        if class_ids.shape != (x.shape[0],):
            raise ConditioningError(
                f"class_ids shape {class_ids.shape} != batch ({x.shape[0]},)")
        flat = self.trunk.forward(x, train)
        emb = self.embedding.forward(class_ids, train)
        z = np.concatenate([flat, emb.astype(flat.dtype)], axis=1)
        return self.out_act.forward(self.head.forward(z, train), train)

    def backward(self, dsettings):
        dz = self.head.backward(self.out_act.backward(dsettings))
        dflat = dz[:, : self.flat_width]
        self.embedding.backward(dz[:, self.flat_width:])
        self.trunk.backward(np.ascontiguousarray(dflat))


_KINDS = {net.kind: net for net in (FxNet, SetNet, MultiNet, SetNetCond)}


def build_network(kind, seed=0, dtype=np.float32, **arch_overrides):
    if kind not in _KINDS:
        raise ValueError(f"unknown network variant {kind!r}; choose from {sorted(_KINDS)}")
    return _KINDS[kind](seed=seed, dtype=dtype, **arch_overrides)
