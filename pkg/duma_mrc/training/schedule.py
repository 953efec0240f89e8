import math


def warmup_steps(total_steps: int, warmup_fraction: float) -> int:
    return max(1, int(round(warmup_fraction * total_steps)))


def total_training_steps(train_sizes, batch_size: int, epochs: int) -> int:
    """epochs x ceil(sum of training questions / batch size), over all tasks combined."""
    return epochs * math.ceil(sum(train_sizes) / batch_size)


def linear_schedule(step: int, total_steps: int, warmup: int, peak_lr: float) -> float:
    """Linear rise 0 -> peak over [0, warmup], then linear decay peak -> 0 over [warmup, total]."""
    step = min(max(step, 0), total_steps)
    if step <= warmup:
        return peak_lr * step / max(warmup, 1)
    return peak_lr * (total_steps - step) / max(total_steps - warmup, 1)
