"""Minibatch training and validation accuracy for a built model."""

from __future__ import annotations

import numpy as np
import torch
from torch import nn


def _to_tensors(images: np.ndarray, labels: np.ndarray):
    # channels-last numpy to NCHW float tensors
    x = torch.from_numpy(images).permute(0, 3, 1, 2).contiguous()
    y = torch.from_numpy(labels)
    return x, y


def train_and_evaluate(
    model: nn.Module,
    train: tuple[np.ndarray, np.ndarray],
    val: tuple[np.ndarray, np.ndarray],
    *,
    epochs: int,
    batch_size: int = 64,
    learning_rate: float = 1e-3,
) -> float:
    """Train for the requested epochs, return validation accuracy in [0, 1].

    Uses whatever global torch seed the caller set; this function draws the
    shuffling order from the global generator, so a fixed seed fixes the run.
    """
    train_x, train_y = _to_tensors(*train)
    val_x, val_y = _to_tensors(*val)
    optimizer = torch.optim.Adam(model.parameters(), lr=learning_rate)
    loss_fn = nn.CrossEntropyLoss()

    model.train()
    for _ in range(epochs):
        order = torch.randperm(len(train_x))
        for start in range(0, len(order), batch_size):
            batch = order[start:start + batch_size]
            if len(batch) < 2:
                continue  # a 1-sample batch breaks batch-norm statistics
            optimizer.zero_grad()
            loss = loss_fn(model(train_x[batch]), train_y[batch])
            loss.backward()
            optimizer.step()

    model.eval()
    correct = 0
    with torch.no_grad():
        for start in range(0, len(val_x), 256):
            logits = model(val_x[start:start + 256])
            correct += (logits.argmax(dim=1) == val_y[start:start + 256]).sum().item()
    return correct / len(val_x)
