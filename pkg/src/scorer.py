"""
Arc Scorer Module for the Music Dependency Parser
Summed feature embeddings, a transformer encoder with relative position
representations, a learnable root row and an arc predictor producing the
weighted adjacency matrix over potential arcs
"""

import logging
import math
from typing import Dict, List, Literal, Optional, Sequence, Union

import numpy as np
import torch
import torch.nn.functional as F
from pydantic import BaseModel, ConfigDict, Field, model_validator
from torch import nn

from .config import EMBEDDING_INIT_STD, METRICAL_TEMPLATES, MODEL_DEFAULTS, OFF_GRID_STRENGTH
from .exceptions import OutOfVocabError

logger = logging.getLogger(__name__)


class ModelConfig(BaseModel):
    """Hyperparameters of the encoder and arc predictor"""

    model_config = ConfigDict(frozen=True)

    # Filled from the training corpus when left empty
    vocab_sizes: List[int] = Field(default_factory=list)
    embed_dim: int = Field(MODEL_DEFAULTS['embed_dim'], gt=0)
    encoder_layers: int = Field(MODEL_DEFAULTS['encoder_layers'], ge=0)
    hidden_dim: int = Field(MODEL_DEFAULTS['hidden_dim'], gt=0)
    attention_heads: int = Field(MODEL_DEFAULTS['attention_heads'], gt=0)
    mlp_layers: int = Field(MODEL_DEFAULTS['mlp_layers'], ge=1)
    dropout: float = Field(MODEL_DEFAULTS['dropout'], ge=0.0, lt=1.0)
    max_relative_distance: int = Field(MODEL_DEFAULTS['max_relative_distance'], gt=0)
    arc_predictor: Literal['mlp', 'bilinear'] = MODEL_DEFAULTS['arc_predictor']
    activation: Literal['gelu'] = 'gelu'
    # numerator -> subdivision factors per grid level, stored with the weights
    metrical_templates: Dict[int, List[int]] = Field(
        default_factory=lambda: {k: list(v) for k, v in METRICAL_TEMPLATES.items()}
    )

    @model_validator(mode='after')
    def _check_shapes(self) -> 'ModelConfig':
        if self.hidden_dim % self.attention_heads:
            raise ValueError(
                f"hidden_dim {self.hidden_dim} is not divisible by attention_heads {self.attention_heads}"
            )
        if any(size <= 0 for size in self.vocab_sizes):
            raise ValueError(f"vocabulary sizes must be positive: {self.vocab_sizes}")
        for numerator, divisions in self.metrical_templates.items():
            if numerator <= 0 or not divisions or any(d <= 0 for d in divisions):
                raise ValueError(f"metrical template {numerator}: {divisions} needs positive entries")
            if len(divisions) > OFF_GRID_STRENGTH:
                raise ValueError(
                    f"metrical template {numerator} has {len(divisions)} levels; at most {OFF_GRID_STRENGTH} fit"
                )
        return self


def potential_arc_mask(rest_mask: Sequence[bool]) -> torch.Tensor:
    """
    Boolean (λ, λ+1) matrix of connectable (dependent, head column) pairs

    Column 0 is the dummy root, column j >= 1 is element j-1. Self-loops and
    arcs touching a rest are excluded; a rest row keeps only its dummy column.
    """
    rest = torch.as_tensor(list(rest_mask), dtype=torch.bool)
    n = rest.shape[0]
    mask = torch.ones(n, n + 1, dtype=torch.bool)
    idx = torch.arange(n)
    mask[idx, idx + 1] = False
    mask[:, 1:][:, rest] = False
    mask[rest] = False
    mask[rest, 0] = True
    return mask


class RelativeMultiHeadAttention(nn.Module):
    """
    Self-attention with clipped relative position embeddings added to the
    keys and the values
    """

    def __init__(self, dims: int, heads: int, max_dist: int, dropout: float):
        super().__init__()
        self.dims = dims
        self.heads = heads
        self.head_dim = dims // heads
        self.max_dist = max_dist

        self.query = nn.Linear(dims, dims)
        self.key = nn.Linear(dims, dims)
        self.value = nn.Linear(dims, dims)
        self.out = nn.Linear(dims, dims)
        self.rel_key = nn.Embedding(2 * max_dist + 1, self.head_dim)
        self.rel_value = nn.Embedding(2 * max_dist + 1, self.head_dim)
        self.dropout = nn.Dropout(dropout)

    def relative_indices(self, seq_len: int, device: torch.device) -> torch.Tensor:
        positions = torch.arange(seq_len, device=device)
        distance = positions.unsqueeze(0) - positions.unsqueeze(1)
        return distance.clamp(-self.max_dist, self.max_dist) + self.max_dist

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        seq_len = x.shape[0]
        q = self.query(x).view(seq_len, self.heads, self.head_dim).transpose(0, 1)
        k = self.key(x).view(seq_len, self.heads, self.head_dim).transpose(0, 1)
        v = self.value(x).view(seq_len, self.heads, self.head_dim).transpose(0, 1)

        rel = self.relative_indices(seq_len, x.device)
        rel_k = self.rel_key(rel)
        rel_v = self.rel_value(rel)

        content = torch.matmul(q, k.transpose(-1, -2))
        position = torch.einsum('hid,ijd->hij', q, rel_k)
        weights = F.softmax((content + position) / math.sqrt(self.head_dim), dim=-1)
        weights = self.dropout(weights)

        attended = torch.matmul(weights, v) + torch.einsum('hij,ijd->hid', weights, rel_v)
        return self.out(attended.transpose(0, 1).reshape(seq_len, self.dims))


class EncoderLayer(nn.Module):
    """Attention and feed-forward blocks, each followed by residual add and layer norm"""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        h = cfg.hidden_dim
        self.attention = RelativeMultiHeadAttention(h, cfg.attention_heads,
                                                    cfg.max_relative_distance, cfg.dropout)
        self.norm1 = nn.LayerNorm(h)
        self.ffn = nn.Sequential(nn.Linear(h, h), nn.GELU(), nn.Linear(h, h))
        self.norm2 = nn.LayerNorm(h)
        self.dropout = nn.Dropout(cfg.dropout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.norm1(x + self.dropout(self.attention(x)))
        return self.norm2(x + self.dropout(self.ffn(x)))


class MLPArcPredictor(nn.Module):
    """Scores the concatenation (head row, dependent row) with a small MLP"""

    def __init__(self, hidden_dim: int, layers: int, dropout: float):
        super().__init__()
        blocks: List[nn.Module] = []
        in_dim = 2 * hidden_dim
        for _ in range(layers - 1):
            blocks += [nn.Linear(in_dim, hidden_dim), nn.GELU(), nn.Dropout(dropout)]
            in_dim = hidden_dim
        blocks.append(nn.Linear(in_dim, 1))
        self.net = nn.Sequential(*blocks)

    def forward(self, head_rows: torch.Tensor, dep_rows: torch.Tensor) -> torch.Tensor:
        n_deps, n_heads = dep_rows.shape[0], head_rows.shape[0]
        pairs = torch.cat([
            head_rows.unsqueeze(0).expand(n_deps, n_heads, -1),
            dep_rows.unsqueeze(1).expand(n_deps, n_heads, -1),
        ], dim=-1)
        return self.net(pairs).squeeze(-1)


class BilinearArcPredictor(nn.Module):
    """Bilinear alternative to the MLP predictor, kept for ablation runs"""

    def __init__(self, hidden_dim: int):
        super().__init__()
        self.bilinear = nn.Bilinear(hidden_dim, hidden_dim, 1)

    def forward(self, head_rows: torch.Tensor, dep_rows: torch.Tensor) -> torch.Tensor:
        n_deps, n_heads = dep_rows.shape[0], head_rows.shape[0]
        heads = head_rows.unsqueeze(0).expand(n_deps, n_heads, -1).contiguous()
        deps = dep_rows.unsqueeze(1).expand(n_deps, n_heads, -1).contiguous()
        return self.bilinear(heads, deps).squeeze(-1)


class ArcScorer(nn.Module):
    """All learnable tensors of the parser: embeddings, encoder, root row, arc predictor"""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        if not cfg.vocab_sizes:
            raise ValueError("ModelConfig.vocab_sizes is empty; build it from the duration vocabulary first")
        self.cfg = cfg
        self.embeddings = nn.ModuleList(
            nn.Embedding(size, cfg.embed_dim) for size in cfg.vocab_sizes
        )
        self.input_proj = nn.Linear(cfg.embed_dim, cfg.hidden_dim)
        self.layers = nn.ModuleList(EncoderLayer(cfg) for _ in range(cfg.encoder_layers))
        self.root_row = nn.Parameter(torch.empty(1, cfg.hidden_dim))
        if cfg.arc_predictor == 'bilinear':
            self.arc_predictor: nn.Module = BilinearArcPredictor(cfg.hidden_dim)
        else:
            self.arc_predictor = MLPArcPredictor(cfg.hidden_dim, cfg.mlp_layers, cfg.dropout)
        self.reset_parameters()

    def reset_parameters(self) -> None:
        """Fan-in uniform for linear maps, normal(0, 0.02) for embeddings and the root row"""
        for module in self.modules():
            if isinstance(module, nn.Linear):
                bound = 1.0 / math.sqrt(module.in_features)
                nn.init.uniform_(module.weight, -bound, bound)
                nn.init.uniform_(module.bias, -bound, bound)
            elif isinstance(module, nn.Bilinear):
                bound = 1.0 / math.sqrt(module.in1_features)
                nn.init.uniform_(module.weight, -bound, bound)
                nn.init.uniform_(module.bias, -bound, bound)
            elif isinstance(module, nn.Embedding):
                nn.init.normal_(module.weight, 0.0, EMBEDDING_INIT_STD)
            elif isinstance(module, nn.LayerNorm):
                nn.init.ones_(module.weight)
                nn.init.zeros_(module.bias)
        nn.init.normal_(self.root_row, 0.0, EMBEDDING_INIT_STD)

    def embed(self, x: torch.Tensor) -> torch.Tensor:
        """Sum of the per-feature embedding vectors, one row per element"""
        if x.dim() != 2 or x.shape[1] != len(self.embeddings):
            raise OutOfVocabError(
                f"expected a (λ, {len(self.embeddings)}) feature matrix, got {tuple(x.shape)}"
            )
        for column, size in enumerate(self.cfg.vocab_sizes):
            values = x[:, column]
            if values.numel() and (values.min() < 0 or values.max() >= size):
                raise OutOfVocabError(
                    f"feature column {column} has values outside [0, {size}): {values.tolist()}"
                )
        return sum(table(x[:, column]) for column, table in enumerate(self.embeddings))

    def encode(self, e: torch.Tensor) -> torch.Tensor:
        """Contextual rows for the λ elements followed by the root row: (λ+1, h)"""
        h = self.input_proj(e)
        for layer in self.layers:
            h = layer(h)
        return torch.cat([h, self.root_row], dim=0)

    def score_arcs(self, H: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        """
        Logit per (dependent, head column); column 0 reads the root row, column
        j >= 1 reads element j-1. Entries outside the mask are -inf.
        """
        n = H.shape[0] - 1
        head_rows = torch.cat([H[n:], H[:n]], dim=0)
        logits = self.arc_predictor(head_rows, H[:n])
        return logits.masked_fill(~mask, float('-inf'))

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        return self.score_arcs(self.encode(self.embed(x)), mask)


ModelParams = ArcScorer


def _as_long(x: Union[np.ndarray, torch.Tensor], device: torch.device) -> torch.Tensor:
    return torch.as_tensor(np.asarray(x) if not isinstance(x, torch.Tensor) else x,
                           dtype=torch.long, device=device)


def init_params(cfg: ModelConfig, seed: int) -> ArcScorer:
    """Fresh parameters, reproducible for a given seed"""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        model = ArcScorer(cfg)
    logger.debug(f"Initialized arc scorer with seed {seed}: "
                 f"{sum(p.numel() for p in model.parameters())} parameters")
    return model


def embed(x, p: ArcScorer) -> torch.Tensor:
    return p.embed(_as_long(x, p.root_row.device))


def encode(e: torch.Tensor, p: ArcScorer) -> torch.Tensor:
    return p.encode(e)


def score_arcs(H: torch.Tensor, mask: torch.Tensor, p: ArcScorer) -> torch.Tensor:
    return p.score_arcs(H, mask)


def forward(x, mask: torch.Tensor, p: ArcScorer) -> torch.Tensor:
    return p(_as_long(x, p.root_row.device), mask.to(p.root_row.device))


def predict_scores(p: ArcScorer, x, rest_mask: Optional[Sequence[bool]] = None) -> np.ndarray:
    """Eval-mode forward pass returning a float64 numpy ArcScores matrix"""
    n = len(x)
    mask = potential_arc_mask(rest_mask if rest_mask is not None else [False] * n)
    was_training = p.training
    p.eval()
    with torch.no_grad():
        scores = forward(x, mask, p)
    p.train(was_training)
    return scores.detach().cpu().double().numpy()
