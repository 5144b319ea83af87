"""Small CNN letter classifier and the score backend built on it.

The classifier doubles as the ranking model for candidate selection and as a
desk-scale legibility oracle: :class:`ClassifierBackend` exposes
``grad_x log p(letter | x)`` (averaged over Gaussian perturbations of ``x``) as
the score, so the whole pipeline runs without a diffusion model.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import string
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ..raster import rasterize
from ..utils.validation import check_images, check_letter
from .base import ConditioningEmbedding, GuidanceBackend

log = logging.getLogger(__name__)

CHECKPOINT_ENV = "AMBIGRAM_CHECKPOINT_ROOT"
DEFAULT_FONTS = (
    "DejaVuSans.ttf",
    "DejaVuSans-Bold.ttf",
    "DejaVuSerif.ttf",
    "DejaVuSerif-Bold.ttf",
    "DejaVuSansMono.ttf",
    "DejaVuSansMono-Bold.ttf",
)


def class_names(n_classes: int) -> list:
    if n_classes == 26:
        return list(string.ascii_lowercase)
    if n_classes == 52:
        return list(string.ascii_uppercase + string.ascii_lowercase)
    raise ValueError("n_classes must be 26 (case-insensitive) or 52")


def checkpoint_root() -> Path:
    root = os.environ.get(CHECKPOINT_ENV)
    return Path(root) if root else Path.home() / ".cache" / "ambigram"


class _LetterNet(nn.Module):
    def __init__(self, n_classes: int, width: int = 32):
        super().__init__()
        w = width
        self.features = nn.Sequential(
            nn.Conv2d(1, w, 5, padding=2), nn.SiLU(), nn.AvgPool2d(2),
            nn.Conv2d(w, 2 * w, 3, padding=1), nn.SiLU(), nn.AvgPool2d(2),
            nn.Conv2d(2 * w, 2 * w, 3, padding=1), nn.SiLU(), nn.AvgPool2d(2),
            nn.Conv2d(2 * w, 4 * w, 3, padding=1), nn.SiLU(), nn.AdaptiveAvgPool2d(4),
        )
        self.head = nn.Sequential(
            nn.Flatten(), nn.Linear(4 * w * 16, 128), nn.SiLU(), nn.Dropout(0.2), nn.Linear(128, n_classes)
        )

    def forward(self, x):
        return self.head(self.features(x))


def _random_homographies(n: int, res: int, rng: np.random.Generator, distortion: float):
    from ..raster import _homography

    mats = np.empty((n, 3, 3))
    c = (res - 1) / 2
    corners = np.array([[0, 0], [res - 1, 0], [res - 1, res - 1], [0, res - 1]], float)
    for i in range(n):
        s = rng.uniform(0.7, 1.05)
        a = np.deg2rad(rng.uniform(-10, 10))
        shear = rng.uniform(-0.15, 0.15)
        m = s * np.array([[np.cos(a), -np.sin(a) + shear], [np.sin(a), np.cos(a)]])
        t = rng.uniform(-0.08, 0.08, size=2) * res
        dst = (corners - c) @ m.T + c + t
        dst += rng.uniform(-1, 1, size=dst.shape) * distortion * res / 2
        mats[i] = _homography(dst, corners)  # output pixel -> input pixel
    return torch.tensor(mats, dtype=torch.float32)


def augment_letters(images: torch.Tensor, rng: np.random.Generator, distortion: float = 0.3, noise: float = 0.2) -> torch.Tensor:
    """Random geometric warps, stroke-weight changes and additive noise on (B, H, W)."""
    b, h, w = images.shape
    hm = _random_homographies(b, h, rng, distortion)
    ys, xs = torch.meshgrid(torch.arange(h, dtype=torch.float32), torch.arange(w, dtype=torch.float32), indexing="ij")
    pts = torch.stack([xs, ys, torch.ones_like(xs)], -1).reshape(-1, 3)
    src = torch.einsum("bij,pj->bpi", hm, pts)
    src = src[..., :2] / src[..., 2:3]
    grid = torch.stack([(2 * src[..., 0] + 1) / w - 1, (2 * src[..., 1] + 1) / h - 1], -1).reshape(b, h, w, 2)
    out = F.grid_sample(images[:, None], grid, mode="bilinear", padding_mode="zeros", align_corners=False)
    op = rng.uniform(size=b)
    dil = torch.from_numpy(op < 0.25)
    ero = torch.from_numpy(op > 0.85)
    out = torch.where(dil[:, None, None, None], F.max_pool2d(out, 3, 1, 1), out)
    out = torch.where(ero[:, None, None, None], -F.max_pool2d(-out, 3, 1, 1), out)
    sig = torch.from_numpy(rng.uniform(0, noise, size=(b, 1, 1, 1))).float()
    gen = torch.Generator().manual_seed(int(rng.integers(2**31)))
    out = out + sig * torch.randn(out.shape, generator=gen)
    return out[:, 0]


def render_font_letters(fonts=DEFAULT_FONTS, resolution: int = 64, cases=("upper", "lower")):
    """Render every A-Z letter of each font; returns (images, characters)."""
    from ..fonts import load_font_glyph

    imgs, chars = [], []
    for font in fonts:
        for case in cases:
            for ch in string.ascii_uppercase:
                g = load_font_glyph(font, ch, case)
                imgs.append(rasterize(g, resolution).data)
                chars.append(ch if case == "upper" else ch.lower())
    return torch.stack(imgs), chars


class LetterClassifier(BaseEstimator, ClassifierMixin):
    """CNN letter classifier on ink-is-1 rasters.

    Parameters
    ----------
    n_classes : {26, 52}
        26 folds case (labels 'a'..'z'); 52 keeps 'A'..'Z' and 'a'..'z' apart.
    resolution : int
        Input raster size.
    epochs, n_augment, batch_size, lr : training budget.
    random_state : int
        Seeds weight init, augmentation and batch order.
    """

    def __init__(self, n_classes=26, resolution=64, width=16, epochs=8, n_augment=24, batch_size=128, lr=3e-3, random_state=0):
        self.n_classes = n_classes
        self.resolution = resolution
        self.width = width
        self.epochs = epochs
        self.n_augment = n_augment
        self.batch_size = batch_size
        self.lr = lr
        self.random_state = random_state

    def _label(self, ch: str) -> int:
        check_letter(ch)
        names = self.classes_
        key = ch.lower() if self.n_classes == 26 else ch
        return names.index(key)

    def encode(self, letters) -> torch.Tensor:
        return torch.tensor([self._label(c) for c in letters], dtype=torch.long)

    def fit(self, X, y):
        """Train on base images ``X`` (n, H, W) with characters ``y``; augments on the fly."""
        X = check_images(X, self.resolution)
        self.classes_ = class_names(self.n_classes)
        labels = self.encode(y)
        torch.manual_seed(self.random_state)
        rng = np.random.default_rng(self.random_state)
        self.net_ = _LetterNet(self.n_classes, self.width)
        opt = torch.optim.AdamW(self.net_.parameters(), lr=self.lr, weight_decay=1e-4)
        n = len(X) * self.n_augment
        steps = self.epochs * ((n + self.batch_size - 1) // self.batch_size)
        sched = torch.optim.lr_scheduler.OneCycleLR(opt, max_lr=self.lr, total_steps=steps)
        self.net_.train()
        self.loss_curve_ = []
        for epoch in range(self.epochs):
            order = rng.permutation(n) % len(X)
            total = 0.0
            for s in range(0, n, self.batch_size):
                idx = torch.from_numpy(order[s : s + self.batch_size])
                xb = augment_letters(X[idx], rng)
                loss = F.cross_entropy(self.net_(xb[:, None]), labels[idx])
                opt.zero_grad()
                loss.backward()
                opt.step()
                sched.step()
                total += loss.item() * len(idx)
            self.loss_curve_.append(total / n)
            log.info("classifier epoch %d loss %.4f", epoch, self.loss_curve_[-1])
        self.net_.eval()
        for p in self.net_.parameters():
            p.requires_grad_(False)
        return self

    def logits(self, x: torch.Tensor) -> torch.Tensor:
        """Differentiable logits for (B, H, W) or (H, W) tensors."""
        check_is_fitted(self, "net_")
        if x.ndim == 2:
            x = x[None]
        if tuple(x.shape[-2:]) != (self.resolution, self.resolution):
            x = F.interpolate(x[:, None], size=(self.resolution,) * 2, mode="bilinear", align_corners=False)[:, 0]
        return self.net_(x[:, None].float())

    def log_proba(self, x: torch.Tensor) -> torch.Tensor:
        return F.log_softmax(self.logits(x), dim=-1)

    def predict_proba(self, X) -> np.ndarray:
        X = check_images(X, None)
        with torch.no_grad():
            return self.log_proba(X).exp().numpy()

    def predict(self, X) -> np.ndarray:
        proba = self.predict_proba(X)
        return np.array([self.classes_[i] for i in proba.argmax(1)])

    def cross_entropy(self, X, letters) -> np.ndarray:
        """Per-image cross-entropy (nats) against the target characters."""
        X = check_images(X, None)
        with torch.no_grad():
            lp = self.log_proba(X)
        target = self.encode(letters)
        return (-lp[torch.arange(len(target)), target]).double().numpy()

    def fingerprint(self) -> str:
        check_is_fitted(self, "net_")
        h = hashlib.sha256()
        for k, v in self.net_.state_dict().items():
            h.update(k.encode())
            h.update(v.numpy().tobytes())
        return h.hexdigest()[:16]

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        torch.save({"params": self.get_params(), "state": self.net_.state_dict(), "loss_curve": self.loss_curve_}, path)
        return path

    @classmethod
    def load(cls, path) -> "LetterClassifier":
        blob = torch.load(path, map_location="cpu", weights_only=True)
        clf = cls(**blob["params"])
        clf.classes_ = class_names(clf.n_classes)
        clf.net_ = _LetterNet(clf.n_classes, clf.width)
        clf.net_.load_state_dict(blob["state"])
        clf.net_.eval()
        for p in clf.net_.parameters():
            p.requires_grad_(False)
        clf.loss_curve_ = list(blob.get("loss_curve", []))
        return clf


def default_letter_classifier(n_classes: int = 26, fonts=DEFAULT_FONTS, cache_dir=None, **params) -> LetterClassifier:
    """Train (or load from the checkpoint cache) the reference classifier."""
    clf = LetterClassifier(n_classes=n_classes, **params)
    key = hashlib.sha256(
        json.dumps({"params": clf.get_params(), "fonts": list(fonts), "v": 1}, sort_keys=True).encode()
    ).hexdigest()[:12]
    path = Path(cache_dir or checkpoint_root()) / f"letter_classifier_{n_classes}_{key}.pt"
    if path.exists():
        return LetterClassifier.load(path)
    X, y = render_font_letters(fonts, clf.resolution)
    prev = torch.get_num_threads()
    clf.fit(X, y)
    torch.set_num_threads(prev)
    clf.save(path)
    return clf


_SINGLE = re.compile(r"letter ([A-Za-z]) in (upper|lower) case")
_TEXT = re.compile(r'text "([A-Za-z]+)"')


class ClassifierBackend(GuidanceBackend):
    """Guidance from a letter classifier: score = grad_x log p(letters | x).

    Rasters W = k*H wide are split into k square cells, one letter each (this is
    how pair prompts are scored).  ``denoise`` returns ``x + sigma^2 * score`` so
    that the generic denoiser contract also holds.
    """

    backend_id = "letter-classifier"
    direct_score = True

    def __init__(self, classifier: LetterClassifier, sigma_range=(0.02, 0.15)):
        self.classifier = classifier
        self.resolution = classifier.resolution
        self.sigma_range = tuple(sigma_range)

    def embed(self, prompt: str) -> ConditioningEmbedding:
        m = _SINGLE.search(prompt)
        if m:
            letters = (m.group(1).upper() if m.group(2) == "upper" else m.group(1).lower(),)
        else:
            m = _TEXT.search(prompt)
            if not m:
                raise ValueError(f"cannot extract target letters from prompt {prompt!r}")
            letters = tuple(m.group(1))
        labels = tuple(int(v) for v in self.classifier.encode(letters))
        return ConditioningEmbedding(self.backend_id, prompt, labels)

    def _cells(self, x: torch.Tensor, k: int) -> torch.Tensor:
        b, h, w = x.shape
        if w != k * h:
            raise ValueError(f"raster {h}x{w} cannot hold {k} square letter cells")
        return x.reshape(b, h, k, h).permute(0, 2, 1, 3).reshape(b * k, h, h)

    def log_likelihood(self, x: torch.Tensor, c: ConditioningEmbedding) -> torch.Tensor:
        """Summed log p(letter_i | cell_i) per batch item (differentiable)."""
        squeeze = x.ndim == 2
        if squeeze:
            x = x[None]
        k = len(c.payload)
        lp = self.classifier.log_proba(self._cells(x, k)).reshape(x.shape[0], k, -1)
        target = torch.tensor(c.payload)
        out = lp[:, torch.arange(k), target].sum(-1)
        return out[0] if squeeze else out

    def score(self, x, sigma, c, n_samples=1, generator=None):
        total = torch.zeros_like(x)
        for _ in range(n_samples):
            noise = torch.randn(x.shape, generator=generator, dtype=x.dtype)
            xin = (x + sigma * noise).detach().requires_grad_(True)
            with torch.enable_grad():
                ll = self.log_likelihood(xin, c).sum()
                (g,) = torch.autograd.grad(ll, xin)
            total += g
        return total / n_samples

    def denoise(self, x, sigma, c):
        return x + sigma**2 * self.score(x, 0.0, c, 1, torch.Generator().manual_seed(0))

    def describe(self):
        return {**super().describe(), "classifier": self.classifier.fingerprint(), "n_classes": self.classifier.n_classes}
