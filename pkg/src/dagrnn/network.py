"""The full labelling network: conv stage, four-direction DAG-RNN, deconvolution, softmax."""
from dataclasses import dataclass, field

import numpy as np

from . import conv as cv
from .dag_rnn import backward_ensemble, forward_ensemble, init_ensemble
from .errors import DimensionError, StructureError
from .grid import DIRECTIONS, GridSpec, Neighborhood, decompose_all
from .objective import IGNORE, ClassWeights, weighted_ce_loss
from .tensor import softmax

STAGES = ("conv", "rnn", "deconv")


@dataclass
class FullNetwork:
    config: cv.NetConfig
    conv_layers: list
    rnn: object  # EnsembleParams
    deconv: cv.DeconvLayer
    weights: ClassWeights
    neighborhood: Neighborhood = Neighborhood.N8
    recurrent: bool = True
    frozen: tuple = ()
    _dag_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.neighborhood = Neighborhood.parse(self.neighborhood)
        cfg = self.config
        if self.rnn.directions[DIRECTIONS[0]].input_dim != cfg.feature_dim:
            raise StructureError("conv output channels differ from the DAG-RNN input dim")
        if self.deconv.kernel.shape[2] != self.rnn.c.size or self.deconv.kernel.shape[3] != cfg.num_classes:
            raise StructureError("deconvolution channels do not match the DAG-RNN output / class count")
        if self.deconv.stride != cfg.downsample:
            raise StructureError(f"deconv stride {self.deconv.stride} != conv downsampling {cfg.downsample}")
        if not self.recurrent:
            for p in self.rnn.directions.values():
                p.W[...] = 0.0

    @classmethod
    def create(cls, config, rng, weights=None, neighborhood=8, recurrent=True, frozen=(), recurrent_scale=0.1):
        layers = cv.init_conv_stage(config, rng)
        rnn = init_ensemble(config.feature_dim, config.hidden_dim, config.num_classes, rng, recurrent_scale)
        deconv = cv.bilinear_deconv(config.num_classes, config.downsample)
        if weights is None:
            weights = ClassWeights(np.ones(config.num_classes), eta=0.0)
        return cls(config, layers, rnn, deconv, weights, neighborhood, recurrent, tuple(frozen))

    def parameters(self):
        """Ordered name -> array mapping; the arrays are the live parameters."""
        out = {}
        for i, layer in enumerate(self.conv_layers):
            out[f"conv{i}.kernel"] = layer.kernel
            out[f"conv{i}.bias"] = layer.bias
        out.update(self.rnn.named_arrays("rnn"))
        out["deconv.kernel"] = self.deconv.kernel
        return out

    def trainable(self, name):
        stage = "conv" if name.startswith("conv") else name.split(".")[0]
        if stage in self.frozen:
            return False
        if not self.recurrent and name.startswith("rnn.") and name.endswith(".W"):
            return False
        return True

    def dags(self, height, width):
        key = (height, width)
        if key not in self._dag_cache:
            self._dag_cache[key] = decompose_all(GridSpec(height, width, self.neighborhood))
        return self._dag_cache[key]

    def padded_extent(self, n):
        f = self.config.downsample
        return -(-n // f) * f


def _pad_inputs(net, image, labels=None):
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != net.config.layers[0].c_in:
        raise DimensionError(f"image {image.shape} is not H x W x {net.config.layers[0].c_in}")
    H, W = image.shape[:2]
    f = net.config.downsample
    if H < f or W < f:
        raise DimensionError(f"image {H}x{W} smaller than the downsampling factor {f}")
    Hp, Wp = net.padded_extent(H), net.padded_extent(W)
    image = np.pad(image, ((0, Hp - H), (0, Wp - W), (0, 0)))
    if labels is not None:
        labels = np.asarray(labels)
        if labels.shape != (H, W):
            raise DimensionError(f"labels {labels.shape} do not match image {H}x{W}")
        labels = np.pad(labels, ((0, Hp - H), (0, Wp - W)), constant_values=IGNORE)
    return image, labels


def _forward(net, image):
    feat, conv_caches = cv.conv_stage_forward(net.config, net.conv_layers, image)
    h, w, d = feat.shape
    dags = net.dags(h, w)
    x = feat.reshape(h * w, d)
    trace = forward_ensemble(net.rnn, dags, x)
    pre = trace.pre.reshape(h, w, -1)
    logits, deconv_cache = cv.deconv_forward(net.deconv, pre)
    probs = softmax(logits, axis=2)
    return probs, (conv_caches, dags, x, trace, deconv_cache, feat.shape)


def forward_full(net, image):
    """Per-pixel class probabilities ``[H, W, C]`` for an ``[H, W, 3]`` image."""
    H, W = np.shape(image)[:2]
    padded, _ = _pad_inputs(net, image)
    probs, _ = _forward(net, padded)
    return probs[:H, :W]


def predict(net, image):
    return forward_full(net, image).argmax(axis=2).astype(np.uint8)


def backward_full(net, image, labels):
    """Weighted loss, probabilities and gradients for every parameter.

    Returns ``(loss, grads, probs)``; ``grads`` uses the names of
    ``net.parameters()``. Gradients of frozen tensors are zero.
    """
    H, W = np.shape(image)[:2]
    padded, plabels = _pad_inputs(net, image, labels)
    probs, (conv_caches, dags, x, trace, deconv_cache, fshape) = _forward(net, padded)
    loss, dlogits = weighted_ce_loss(probs, plabels, net.weights)

    grads = {}
    dpre, g = cv.deconv_backward(net.deconv, dlogits, deconv_cache)
    grads["deconv.kernel"] = g["kernel"]
    rg, dx = backward_ensemble(net.rnn, dags, x, trace, dpre.reshape(-1, dpre.shape[2]))
    for d in DIRECTIONS:
        for k in "UWVb":
            grads[f"rnn.{d.value}.{k}"] = rg[d][k]
    grads["rnn.c"] = rg["c"]
    _, cg = cv.conv_stage_backward(net.config, net.conv_layers, dx.reshape(fshape), conv_caches)
    for i, g in enumerate(cg):
        grads[f"conv{i}.kernel"] = g["kernel"]
        grads[f"conv{i}.bias"] = g["bias"]

    ordered = {}
    for name, arr in net.parameters().items():
        ordered[name] = grads[name] if net.trainable(name) else np.zeros_like(arr)
    return loss, ordered, probs[:H, :W]


def loss_full(net, image, labels):
    padded, plabels = _pad_inputs(net, image, labels)
    probs, _ = _forward(net, padded)
    return weighted_ce_loss(probs, plabels, net.weights)[0]
