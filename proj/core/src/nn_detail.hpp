#pragma once

#include <span>
#include <vector>

#include "xrnpe/codec.hpp"
#include "xrnpe/network.hpp"

namespace xrnpe::nn::detail {

/// Shared rounding tables, built once per format.
const LatticeRounder& rounder_for(const FormatSpec& format);

/// values <- scale * nearest(values / scale); pass[i] = 0 where the value
/// saturated.
void fake_quantize(std::span<double> values, const FormatSpec& format, double scale,
                   std::vector<std::uint8_t>* pass = nullptr);

/// positions x patch rows for one sample.
std::vector<double> im2col(std::span<const double> sample, const ConvShape& s);
void col2im_add(std::span<const double> col, const ConvShape& s, std::span<double> sample);

double activate(Activation act, double x, double alpha);

/// pre = x * w^T + bias (dense) or the convolution of each sample.
void layer_pre(const Layer& l, const Matrix& x, std::span<const double> w, Matrix& pre);

}  // namespace xrnpe::nn::detail
