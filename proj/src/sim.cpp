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

#include "biohub/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "biohub/error.hpp"

namespace biohub::sim
{

namespace
{

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Stream tags keep each generator's noise independent under one seed.
enum Stream : std::uint64_t
{
  kPpgStream = 1, kEcgStream, kRespStream, kGsrStream, kEegStream, kIbiStream,
};

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void check_rate(double rate_hz)
{
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) {
    throw ConfigError("sample rate must be positive, got " + std::to_string(rate_hz));
  }
}

double frac(double x)
{
  return x - std::floor(x);
}

// Raised-cosine lobe on [start, start + width), unit peak.
double lobe(double phase, double start, double width)
{
  const double u = (phase - start) / width;
  if (u < 0.0 || u >= 1.0) {
    return 0.0;
  }
  return 0.5 * (1.0 - std::cos(kTwoPi * u));
}

// Gaussian bump on a unit circle of phase, so bumps wrap across beats.
double bump(double phase, double centre, double width)
{
  double d = phase - centre;
  d -= std::round(d);
  return std::exp(-0.5 * (d / width) * (d / width));
}

}  // namespace

void SimConfig::validate() const
{
  if (!(heart_rate_bpm > 0.0f) || !(breath_rate_bpm > 0.0f) || !(gsr_baseline_uS > 0.0f)) {
    throw ConfigError("simulator rates and baseline must be positive");
  }
  if (!(noise_sigma >= 0.0f)) {
    throw ConfigError("noise_sigma must be >= 0");
  }
}

SimRng::SimRng(std::uint64_t seed, std::uint64_t stream)
: engine_(splitmix64(seed ^ splitmix64(stream))) {}

double SimRng::uniform()
{
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SimRng::normal()
{
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) {
    u1 = uniform();
  }
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(kTwoPi * u2);
  has_spare_ = true;
  return r * std::cos(kTwoPi * u2);
}

PpgGenerator::PpgGenerator(const SimConfig & cfg, double rate_hz)
: beats_per_sample_(0.0), noise_(cfg.noise_sigma), rng_(cfg.seed, kPpgStream)
{
  cfg.validate();
  check_rate(rate_hz);
  beats_per_sample_ = cfg.heart_rate_bpm / 60.0 / rate_hz;
}

float PpgGenerator::next()
{
  const double phase = frac(static_cast<double>(k_++) * beats_per_sample_);
  double x = lobe(phase, 0.0, 0.4) + 0.25 * lobe(phase, 0.35, 0.3);
  if (noise_ > 0.0f) {
    x += noise_ * rng_.normal();
  }
  return static_cast<float>(x);
}

EcgGenerator::EcgGenerator(const SimConfig & cfg, double rate_hz)
: beats_per_sample_(0.0), noise_(cfg.noise_sigma), rng_(cfg.seed, kEcgStream)
{
  cfg.validate();
  check_rate(rate_hz);
  beats_per_sample_ = cfg.heart_rate_bpm / 60.0 / rate_hz;
}

float EcgGenerator::next()
{
  const double phase = frac(static_cast<double>(k_++) * beats_per_sample_);
  double x = 0.12 * bump(phase, 0.20, 0.025) -
    0.12 * bump(phase, 0.37, 0.010) +
    1.00 * bump(phase, 0.40, 0.012) -
    0.20 * bump(phase, 0.43, 0.010) +
    0.30 * bump(phase, 0.70, 0.050);
  if (noise_ > 0.0f) {
    x += noise_ * rng_.normal();
  }
  return static_cast<float>(std::clamp(x, -2.0, 2.0));
}

RespirationGenerator::RespirationGenerator(const SimConfig & cfg, double rate_hz)
: rate_(rate_hz), breath_hz_(cfg.breath_rate_bpm / 60.0), noise_(cfg.noise_sigma),
  rng_(cfg.seed, kRespStream)
{
  cfg.validate();
  check_rate(rate_hz);
}

float RespirationGenerator::next()
{
  // Kept under 32 N so float spacing stays finer than the 0.01 N grid error.
  constexpr double kMean = 15.0;
  constexpr double kSwing = 5.0;
  const double t = static_cast<double>(k_++) / rate_;
  double x = kMean + kSwing * std::sin(kTwoPi * breath_hz_ * t) +
    1.0 * std::sin(kTwoPi * 0.01 * t);
  if (noise_ > 0.0f) {
    x += noise_ * kSwing * rng_.normal();
  }
  x = std::clamp(x, 0.0, 50.0);
  return static_cast<float>(std::round(x * 100.0) / 100.0);
}

GsrGenerator::GsrGenerator(const SimConfig & cfg, double rate_hz)
: rate_(rate_hz), baseline_(cfg.gsr_baseline_uS), noise_(cfg.noise_sigma),
  rng_(cfg.seed, kGsrStream)
{
  cfg.validate();
  check_rate(rate_hz);
}

float GsrGenerator::next()
{
  constexpr double kResponsesPerSecond = 1.0 / 15.0;
  constexpr double kRise = 0.75;
  constexpr double kDecay = 3.0;
  // Peak of exp(-t/kDecay) - exp(-t/kRise); normalizes responses to unit peak.
  static const double kPeak = [] {
      const double tp = std::log(kDecay / kRise) * kRise * kDecay / (kDecay - kRise);
      return std::exp(-tp / kDecay) - std::exp(-tp / kRise);
    }();

  const double t = static_cast<double>(k_++) / rate_;
  if (rng_.uniform() < kResponsesPerSecond / rate_) {
    active_.push_back(Response{t, baseline_ * (0.05 + 0.2 * rng_.uniform())});
  }
  double x = baseline_ * (1.0 + 0.05 * std::sin(kTwoPi * t / 120.0));
  for (const auto & r : active_) {
    const double dt = t - r.onset_s;
    x += r.amplitude * (std::exp(-dt / kDecay) - std::exp(-dt / kRise)) / kPeak;
  }
  std::erase_if(active_, [t](const Response & r) {return t - r.onset_s > 40.0;});
  if (noise_ > 0.0f) {
    x += noise_ * baseline_ * rng_.normal();
  }
  return static_cast<float>(std::max(x, 0.0));
}

EegGenerator::EegGenerator(const SimConfig & cfg, double rate_hz, std::size_t n_channels)
: rate_(rate_hz), amplitudes_(cfg.eeg_band_amplitudes_uV), noise_(cfg.noise_sigma),
  rng_(cfg.seed, kEegStream)
{
  cfg.validate();
  check_rate(rate_hz);
  if (n_channels == 0) {
    throw ConfigError("EEG needs at least one channel");
  }
  for (std::size_t c = 0; c < n_channels; ++c) {
    gains_.push_back(0.8 + 0.4 * rng_.uniform());
    std::array<double, kEegBands> ph{};
    for (auto & p : ph) {
      p = kTwoPi * rng_.uniform();
    }
    phases_.push_back(ph);
  }
}

std::vector<float> EegGenerator::next()
{
  constexpr double kLevels = 1 << kEegBits;
  constexpr double kStep = 2.0 * kEegRangeUv / kLevels;
  const double t = static_cast<double>(k_++) / rate_;
  double total_amplitude = 0.0;
  for (float a : amplitudes_) {
    total_amplitude += a;
  }
  std::vector<float> out(gains_.size());
  for (std::size_t c = 0; c < gains_.size(); ++c) {
    double x = 0.0;
    for (std::size_t b = 0; b < kEegBands; ++b) {
      x += amplitudes_[b] * std::sin(kTwoPi * kEegBandCentresHz[b] * t + phases_[c][b]);
    }
    x *= gains_[c];
    if (noise_ > 0.0f) {
      x += noise_ * total_amplitude * rng_.normal();
    }
    const double q = std::clamp(std::round((x + kEegRangeUv) / kStep), 0.0, kLevels - 1.0);
    out[c] = static_cast<float>(-kEegRangeUv + q * kStep);
  }
  return out;
}

IbiGenerator::IbiGenerator(const SimConfig & cfg)
: mean_ibi_(60.0 / cfg.heart_rate_bpm), breath_hz_(cfg.breath_rate_bpm / 60.0),
  noise_(cfg.noise_sigma), rng_(cfg.seed, kIbiStream)
{
  cfg.validate();
}

float IbiGenerator::next()
{
  double ibi = mean_ibi_ * (1.0 + 0.03 * std::sin(kTwoPi * breath_hz_ * elapsed_s_));
  if (noise_ > 0.0f) {
    ibi += noise_ * mean_ibi_ * rng_.normal();
  }
  ibi = std::max(ibi, 0.25);
  elapsed_s_ += ibi;
  return static_cast<float>(ibi);
}

namespace
{
template<typename Gen, typename ... Args>
std::vector<float> take(std::size_t n, Args &&... args)
{
  Gen g(std::forward<Args>(args)...);
  std::vector<float> out(n);
  for (auto & x : out) {
    x = g.next();
  }
  return out;
}
}  // namespace

std::vector<float> gen_ppg(const SimConfig & cfg, double rate_hz, std::size_t n)
{
  return take<PpgGenerator>(n, cfg, rate_hz);
}

std::vector<float> gen_ecg(const SimConfig & cfg, double rate_hz, std::size_t n)
{
  return take<EcgGenerator>(n, cfg, rate_hz);
}

std::vector<float> gen_respiration_force(const SimConfig & cfg, double rate_hz, std::size_t n)
{
  return take<RespirationGenerator>(n, cfg, rate_hz);
}

std::vector<float> gen_gsr(const SimConfig & cfg, double rate_hz, std::size_t n)
{
  return take<GsrGenerator>(n, cfg, rate_hz);
}

std::vector<std::vector<float>> gen_eeg(
  const SimConfig & cfg, double rate_hz, std::size_t n_channels, std::size_t n)
{
  EegGenerator g(cfg, rate_hz, n_channels);
  std::vector<std::vector<float>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(g.next());
  }
  return out;
}

}  // namespace biohub::sim
