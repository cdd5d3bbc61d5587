// Copyright 2026 The biohub Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BIOHUB__SIM_HPP_
#define BIOHUB__SIM_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace biohub::sim
{

/// Band order used everywhere: theta, alpha, low beta, high beta, gamma.
inline constexpr std::size_t kEegBands = 5;

struct SimConfig
{
  std::uint64_t seed = 1;
  float heart_rate_bpm = 70.0f;
  float breath_rate_bpm = 15.0f;
  float gsr_baseline_uS = 2.0f;
  /// Noise standard deviation as a fraction of each signal's amplitude.
  float noise_sigma = 0.02f;
  /// Per-band sinusoid amplitude in microvolts. The default is alpha dominant.
  std::array<float, kEegBands> eeg_band_amplitudes_uV{8.0f, 20.0f, 6.0f, 4.0f, 2.0f};

  /// Throws ConfigError when a rate is not positive or noise is negative.
  void validate() const;
};

/// Versioned noise source (v1): std::mt19937_64 for bits, Box-Muller for
/// normals, so streams are identical across standard libraries.
class SimRng
{
public:
  static constexpr int kVersion = 1;

  /// `stream` separates independent generators sharing one seed.
  SimRng(std::uint64_t seed, std::uint64_t stream);

  /// Uniform in [0, 1).
  double uniform();
  double normal();

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Streaming generators. Each produces the same sequence as the batch function
// of the same name: gen_x(cfg, rate, n) is the first n values of XGenerator.

/// Raised-cosine pulse wave (systolic lobe plus dicrotic lobe), unit peak.
class PpgGenerator
{
public:
  PpgGenerator(const SimConfig & cfg, double rate_hz);
  float next();

private:
  double beats_per_sample_;
  float noise_;
  SimRng rng_;
  std::uint64_t k_ = 0;
};

/// Gaussian-bump P-QRS-T complex, R peak of 1.0, bounded to |x| <= 2.
class EcgGenerator
{
public:
  EcgGenerator(const SimConfig & cfg, double rate_hz);
  float next();

private:
  double beats_per_sample_;
  float noise_;
  SimRng rng_;
  std::uint64_t k_ = 0;
};

/// Respiration belt force in newtons: sinusoid plus slow drift, clipped to
/// [0, 50] and quantized to 0.01 N.
class RespirationGenerator
{
public:
  RespirationGenerator(const SimConfig & cfg, double rate_hz);
  float next();

private:
  double rate_;
  double breath_hz_;
  float noise_;
  SimRng rng_;
  std::uint64_t k_ = 0;
};

/// Skin conductance in microsiemens: tonic baseline plus seeded phasic
/// responses, never negative.
class GsrGenerator
{
public:
  GsrGenerator(const SimConfig & cfg, double rate_hz);
  float next();

private:
  struct Response
  {
    double onset_s;
    double amplitude;
  };
  double rate_;
  double baseline_;
  float noise_;
  SimRng rng_;
  std::vector<Response> active_;
  std::uint64_t k_ = 0;
};

/// Multi-channel EEG in microvolts: one sinusoid per band per channel plus
/// noise, quantized to a 14-bit grid over +/-100 uV.
class EegGenerator
{
public:
  EegGenerator(const SimConfig & cfg, double rate_hz, std::size_t n_channels);
  std::vector<float> next();
  std::size_t channels() const noexcept {return gains_.size();}

private:
  double rate_;
  std::array<float, kEegBands> amplitudes_;
  float noise_;
  SimRng rng_;
  std::vector<double> gains_;
  std::vector<std::array<double, kEegBands>> phases_;
  std::uint64_t k_ = 0;
};

/// Inter-beat intervals in seconds around 60/heart_rate with respiratory
/// modulation and noise.
class IbiGenerator
{
public:
  explicit IbiGenerator(const SimConfig & cfg);
  float next();

private:
  double mean_ibi_;
  double breath_hz_;
  float noise_;
  SimRng rng_;
  double elapsed_s_ = 0.0;
};

/// Centre frequency of each simulated EEG band, Hz.
inline constexpr std::array<double, kEegBands> kEegBandCentresHz{6.0, 10.0, 14.0, 20.0, 35.0};
inline constexpr double kEegRangeUv = 100.0;
inline constexpr int kEegBits = 14;

std::vector<float> gen_ppg(const SimConfig & cfg, double rate_hz, std::size_t n);
std::vector<float> gen_ecg(const SimConfig & cfg, double rate_hz, std::size_t n);
std::vector<float> gen_respiration_force(const SimConfig & cfg, double rate_hz, std::size_t n);
std::vector<float> gen_gsr(const SimConfig & cfg, double rate_hz, std::size_t n);
std::vector<std::vector<float>> gen_eeg(
  const SimConfig & cfg, double rate_hz, std::size_t n_channels, std::size_t n);

}  // namespace biohub::sim

#endif  // BIOHUB__SIM_HPP_
