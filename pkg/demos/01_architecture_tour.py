#!/usr/bin/env python3
"""Architecture tour: the fixed encoder/decoder shape chain.

Builds the three-axis reconstruction network, walks a random frame through
every stage, and prints the tensor shape after each layer together with the
parameter budget.
"""

import numpy as np

from vibanom import dcan, nn

config = dcan.DcanConfig()
model = dcan.build(config, seed=0)

print("input frame: 1 channel x %d axes x %d points" % (config.axes, config.frame_len))
print("parameters : %d" % dcan.parameter_count(model))
print()

# One random standardized frame, batch of 1.
x = np.random.default_rng(0).standard_normal((1, 1, 3, 4096)).astype(np.float32)

print("encoder (convolutions)")
h = x
for i, layer in enumerate(model.conv_layers, start=1):
    h = nn.leaky_relu(nn.conv2d_forward(h, layer), config.leaky_slope)
    print("  conv%d k=%s s=%s -> %s" % (i, layer.kernel, layer.stride, h.shape[1:]))

flat = h.reshape(1, -1)
print("  flatten -> %d values" % flat.shape[1])
print()

print("auto-encoding core (dense)")
for i, layer in enumerate(model.fc_layers, start=1):
    flat = nn.dense_forward(flat, layer)
    if i < len(model.fc_layers):
        flat = nn.leaky_relu(flat, config.leaky_slope)
    print("  fc%d %d -> %d" % (i, layer.in_features, layer.out_features))
print()

print("decoder (transposed convolutions)")
h = flat.reshape(1, *config.latent_shape)
for i, layer in enumerate(model.deconv_layers, start=1):
    h = nn.conv_transpose2d_forward(h, layer)
    if i < len(model.deconv_layers):
        h = nn.leaky_relu(h, config.leaky_slope)
    print("  deconv%d k=%s s=%s -> %s" % (i, layer.kernel, layer.stride, h.shape[1:]))
print()

recon = dcan.reconstruct(model, x)
report = dcan.reconstruction_report(x, recon)[0]
print("round trip: input %s -> reconstruction %s" % (x.shape, recon.shape))
print("untrained reconstruction MSE per axis: %s" % (report.per_axis_mse,))
print("untrained total MSE: %.4f (training drives this toward zero)" % report.total_mse)
