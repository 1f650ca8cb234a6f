from apps.autodiff.tensor import Tape, Tensor, apply_op, as_tensor, no_grad

__all__ = ["Tape", "Tensor", "apply_op", "as_tensor", "no_grad"]
