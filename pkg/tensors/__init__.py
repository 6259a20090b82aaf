"""Dense N-dimensional float64 tensors with explicit shape contracts."""
