// SPDX-License-Identifier: Apache-2.0
#include "vocalplan/mcd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "vocalplan/dsp.hpp"
#include "vocalplan/errors.hpp"

namespace vocalplan {

void CepstrumConfig::validate() const {
  if (n_coeffs == 0 || n_coeffs >= n_filters) {
    throw InputError(fmt::format("need 0 < n_coeffs < n_filters (got {}, {})", n_coeffs, n_filters));
  }
  if (!(frame_ms > 0.0) || !(hop_ms > 0.0) || hop_ms > frame_ms) {
    throw InputError(fmt::format("invalid framing {} ms / {} ms", frame_ms, hop_ms));
  }
  if (!(energy_floor > 0.0)) throw InputError("energy_floor must be positive");
}

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct CepstrumPlan {
  std::size_t frame_len = 0;
  std::size_t hop = 0;
  std::size_t count = 0;
  std::vector<std::vector<double>> filters;
  std::vector<std::vector<double>> dct;  // n_coeffs rows (k = 1..D) x n_filters
};

CepstrumPlan plan_cepstrum(const AudioBuffer& buffer, const CepstrumConfig& config) {
  config.validate();
  const int sr = buffer.sample_rate();
  CepstrumPlan plan;
  plan.frame_len = static_cast<std::size_t>(std::lround(config.frame_ms * sr / 1000.0));
  plan.hop = static_cast<std::size_t>(std::lround(config.hop_ms * sr / 1000.0));
  if (plan.frame_len == 0 || plan.hop == 0) throw InputError("cepstrum frame rounds to zero samples");
  if (buffer.size() < plan.frame_len) {
    throw InputError(fmt::format("buffer of {} samples is shorter than one {}-sample frame",
                                 buffer.size(), plan.frame_len));
  }
  plan.count = frame_count(buffer.size(), plan.frame_len, plan.hop);
  plan.filters = mel_filterbank(config.n_filters, plan.frame_len / 2 + 1, plan.frame_len, sr);

  const double m = static_cast<double>(config.n_filters);
  const double norm = std::sqrt(2.0 / m);
  plan.dct.assign(config.n_coeffs, std::vector<double>(config.n_filters));
  for (std::size_t k = 0; k < config.n_coeffs; ++k) {
    for (std::size_t j = 0; j < config.n_filters; ++j) {
      plan.dct[k][j] = norm * std::cos(std::numbers::pi * static_cast<double>(k + 1) *
                                       (static_cast<double>(j) + 0.5) / m);
    }
  }
  return plan;
}

std::vector<double> cepstrum_frame(std::span<const double> frame, const CepstrumPlan& plan,
                                   const CepstrumConfig& config) {
  const auto power = power_spectrum(frame);
  std::vector<double> log_energy(plan.filters.size());
  for (std::size_t j = 0; j < plan.filters.size(); ++j) {
    double e = 0.0;
    for (std::size_t b = 0; b < power.size(); ++b) e += plan.filters[j][b] * power[b];
    log_energy[j] = std::log(std::max(e, config.energy_floor));
  }
  std::vector<double> coeffs(plan.dct.size(), 0.0);
  for (std::size_t k = 0; k < plan.dct.size(); ++k) {
    for (std::size_t j = 0; j < log_energy.size(); ++j) coeffs[k] += plan.dct[k][j] * log_energy[j];
  }
  return coeffs;
}

CepstralTrack make_track(const AudioBuffer& buffer, const CepstrumPlan& plan) {
  CepstralTrack track;
  track.frames.resize(plan.count);
  track.frame_times.resize(plan.count);
  for (std::size_t i = 0; i < plan.count; ++i) {
    track.frame_times[i] = (static_cast<double>(i * plan.hop) + plan.frame_len / 2.0) / buffer.sample_rate();
  }
  return track;
}

}  // namespace

std::vector<std::vector<double>> mel_filterbank(std::size_t n_filters, std::size_t n_bins,
                                                std::size_t dft_length, int sample_rate) {
  const double mel_hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(n_filters + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_hi * static_cast<double>(i) / static_cast<double>(n_filters + 1));
  }
  edges.back() = sample_rate / 2.0;  // exact, despite the mel round trip
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(dft_length);
  std::vector<std::vector<double>> bank(n_filters, std::vector<double>(n_bins, 0.0));
  for (std::size_t j = 0; j < n_filters; ++j) {
    const double lo = edges[j], mid = edges[j + 1], hi = edges[j + 2];
    for (std::size_t b = 0; b < n_bins; ++b) {
      const double f = bin_hz * static_cast<double>(b);
      if (f > lo && f < mid) {
        bank[j][b] = (f - lo) / (mid - lo);
      } else if (f >= mid && f < hi) {
        bank[j][b] = (hi - f) / (hi - mid);
      }
    }
  }
  return bank;
}

CepstralTrack mel_cepstrum(const AudioBuffer& buffer, const CepstrumConfig& config) {
  const CepstrumPlan plan = plan_cepstrum(buffer, config);
  CepstralTrack track = make_track(buffer, plan);
  const auto samples = buffer.samples();
  const auto count = static_cast<std::ptrdiff_t>(plan.count);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    track.frames[idx] = cepstrum_frame(samples.subspan(idx * plan.hop, plan.frame_len), plan, config);
  }
  return track;
}

namespace serial {

CepstralTrack mel_cepstrum(const AudioBuffer& buffer, const CepstrumConfig& config) {
  const CepstrumPlan plan = plan_cepstrum(buffer, config);
  CepstralTrack track = make_track(buffer, plan);
  const auto samples = buffer.samples();
  for (std::size_t i = 0; i < plan.count; ++i) {
    track.frames[i] = cepstrum_frame(samples.subspan(i * plan.hop, plan.frame_len), plan, config);
  }
  return track;
}

}  // namespace serial

namespace {

void check_tracks(const CepstralTrack& a, const CepstralTrack& b) {
  if (a.frames.empty() || b.frames.empty()) throw InputError("MCD: empty cepstral track");
  for (const auto* t : {&a, &b}) {
    for (const auto& f : t->frames) {
      if (f.size() != t->dimension()) throw InputError("MCD: frames within a track differ in dimension");
    }
  }
  if (a.dimension() != b.dimension()) {
    throw InputError(fmt::format("MCD: dimension mismatch ({} vs {})", a.dimension(), b.dimension()));
  }
}

double frame_distance(const std::vector<double>& x, const std::vector<double>& y) {
  double sum = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double diff = x[d] - y[d];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

struct Cell {
  double cost = std::numeric_limits<double>::infinity();
  std::size_t length = 0;
  unsigned char step = 0;  // 0 diagonal, 1 from (i-1, j), 2 from (i, j-1)
};

bool better(const Cell& a, const Cell& b) {
  return a.cost < b.cost || (a.cost == b.cost && a.length < b.length);
}

}  // namespace

Alignment dtw_align(const CepstralTrack& a, const CepstralTrack& b) {
  check_tracks(a, b);
  const std::size_t n = a.size(), m = b.size();
  std::vector<Cell> grid(n * m);
  auto at = [&](std::size_t i, std::size_t j) -> Cell& { return grid[i * m + j]; };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = frame_distance(a.frames[i], b.frames[j]);
      Cell best;
      if (i == 0 && j == 0) {
        best = {0.0, 0, 0};
      } else {
        // Candidate order is symmetric (diagonal first) so ties resolve the
        // same way for (a, b) and (b, a).
        if (i > 0 && j > 0) best = {at(i - 1, j - 1).cost, at(i - 1, j - 1).length, 0};
        if (i > 0) {
          const Cell c{at(i - 1, j).cost, at(i - 1, j).length, 1};
          if (better(c, best)) best = c;
        }
        if (j > 0) {
          const Cell c{at(i, j - 1).cost, at(i, j - 1).length, 2};
          if (better(c, best)) best = c;
        }
      }
      best.cost += d;
      best.length += 1;
      at(i, j) = best;
    }
  }

  Alignment out;
  out.total_cost = at(n - 1, m - 1).cost;
  std::size_t i = n - 1, j = m - 1;
  while (true) {
    out.path.emplace_back(i, j);
    if (i == 0 && j == 0) break;
    switch (at(i, j).step) {
      case 0: --i, --j; break;
      case 1: --i; break;
      default: --j; break;
    }
  }
  std::reverse(out.path.begin(), out.path.end());
  return out;
}

double mcd(const CepstralTrack& a, const CepstralTrack& b) {
  const Alignment alignment = dtw_align(a, b);
  return kMcdScale * alignment.total_cost / static_cast<double>(alignment.path.size());
}

void write_track_csv(std::ostream& out, const CepstralTrack& track) {
  out << "time";
  for (std::size_t d = 1; d <= track.dimension(); ++d) out << ",c" << d;
  out << '\n';
  for (std::size_t i = 0; i < track.size(); ++i) {
    out << fmt::format("{:.17g}", track.frame_times[i]);
    for (double c : track.frames[i]) out << fmt::format(",{:.17g}", c);
    out << '\n';
  }
}

CepstralTrack read_track_csv(std::istream& in) {
  CepstralTrack track;
  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("time", 0) == 0) {
      columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
      continue;
    }
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InputError(fmt::format("track CSV line {}: '{}' is not a number", line_no, cell));
      }
    }
    if (values.size() < 2) throw InputError(fmt::format("track CSV line {}: need time and >= 1 coefficient", line_no));
    if (columns != 0 && values.size() - 1 != columns) {
      throw InputError(fmt::format("track CSV line {}: expected {} coefficients, got {}", line_no, columns,
                                   values.size() - 1));
    }
    track.frame_times.push_back(values.front());
    track.frames.emplace_back(values.begin() + 1, values.end());
  }
  return track;
}

CepstralTrack read_track_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open track file '{}'", path.string()));
  return read_track_csv(in);
}

}  // namespace vocalplan
