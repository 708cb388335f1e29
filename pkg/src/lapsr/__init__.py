"""Progressive Laplacian-pyramid super-resolution on the CPU.

The package is self-contained: numerical kernels, parameter store and SGD
optimizer, the pyramid model, robust loss, MATLAB-style bicubic resampling,
dataset/batch pipeline with checkpointing, PSNR/SSIM evaluation, and a CLI.
"""

__version__ = "0.1.0"
