#pragma once

#include <Eigen/Dense>
#include <iosfwd>

namespace gcs {

/// Ambient-space vector with C channels of length n, stored channel-major:
/// entry (channel ch, position j) lives at data[ch*per_channel_len + j].
/// Real-valued signals carry zero imaginary parts.
struct Signal {
  Eigen::VectorXcd data;
  int channels = 1;
  Eigen::Index per_channel_len = 0;
};

/// Per-channel Fourier coefficients, channel-major, frequency 0..n-1 (DC
/// first) within each channel block.
struct Spectrum {
  Eigen::VectorXcd coeffs;
  int channels = 1;
  Eigen::Index per_channel_len = 0;
};

/// Throws InvalidInputError on shape mismatch or non-finite entries.
void validate(const Signal& s);
void validate(const Spectrum& sp);

Signal make_signal(Eigen::VectorXcd data, int channels);
Signal zero_signal(int channels, Eigen::Index per_channel_len);

/// Unitary per-channel discrete Fourier transform (forward kernel
/// e^{-2*pi*i*j*k/n}, scaled by 1/sqrt(n)).
Spectrum dft(const Signal& s);

/// Inverse of dft; exact round-trip up to floating point.
Signal idft(const Spectrum& sp);

/// The i-th Fourier coefficient of every channel, as a length-C block.
Eigen::VectorXcd sample_coefficient(const Signal& s, Eigen::Index freq);

/// Squared Euclidean norm of the length-C coefficient block at one frequency.
double block_energy(const Spectrum& sp, Eigen::Index freq);

/// 10*log10(peak^2 / MSE); +infinity when the estimate is exact.
double psnr(const Signal& reference, const Signal& estimate, double peak);

/// ||estimate - reference|| / ||reference||.
double relative_error(const Signal& reference, const Signal& estimate);

/// CSV with columns channel,index,re,im; round-trips doubles exactly.
void to_csv(const Signal& s, std::ostream& out);
Signal signal_from_csv(std::istream& in);

}  // namespace gcs
