// SPDX-License-Identifier: Apache-2.0
/**
 * @file   evaluation.cpp
 * @brief  Zero-forcing detection and the BER/NMSE Monte-Carlo sweep.
 */
#include <birnn/evaluation.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <birnn/estimators.hpp>
#include <birnn/parallel.hpp>

namespace birnn {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
  case EstimatorKind::Perfect: return "perfect";
  case EstimatorKind::SLS_interp: return "sls_interp";
  case EstimatorKind::ALS_WI: return "als_wi";
  case EstimatorKind::Bi_SRNN: return "bi_srnn";
  case EstimatorKind::Bi_LSTM: return "bi_lstm";
  case EstimatorKind::Bi_GRU: return "bi_gru";
  }
  return "?";
}

EstimatorKind parse_estimator(std::string_view name) {
  for (EstimatorKind k : {EstimatorKind::Perfect, EstimatorKind::SLS_interp, EstimatorKind::ALS_WI,
                          EstimatorKind::Bi_SRNN, EstimatorKind::Bi_LSTM, EstimatorKind::Bi_GRU})
    if (name == to_string(k))
      return k;
  if (name == "wi")
    return EstimatorKind::ALS_WI;
  if (name == "gru")
    return EstimatorKind::Bi_GRU;
  if (name == "lstm")
    return EstimatorKind::Bi_LSTM;
  if (name == "srnn")
    return EstimatorKind::Bi_SRNN;
  throw std::invalid_argument("unknown estimator: " + std::string(name));
}

bool needs_model(EstimatorKind kind) {
  return kind == EstimatorKind::Bi_SRNN || kind == EstimatorKind::Bi_LSTM ||
         kind == EstimatorKind::Bi_GRU;
}

EstimatorChoice EstimatorChoice::classical(EstimatorKind kind) {
  if (needs_model(kind))
    throw std::invalid_argument(to_string(kind) + " needs trained weights");
  return {kind, nullptr};
}

EstimatorChoice EstimatorChoice::network(EstimatorKind kind, std::shared_ptr<const RnnModel> model) {
  EstimatorChoice e{kind, std::move(model)};
  if (!needs_model(kind))
    throw std::invalid_argument(to_string(kind) + " does not take a model");
  if (!e.model)
    throw std::invalid_argument(to_string(kind) + ": no model loaded");
  return e;
}

void EstimatorChoice::validate(int k_on, int frame_length) const {
  if (!needs_model(kind))
    return;
  if (!model)
    throw std::invalid_argument(name() + ": no model loaded");
  const CellKind want = kind == EstimatorKind::Bi_GRU    ? CellKind::GRU
                        : kind == EstimatorKind::Bi_LSTM ? CellKind::LSTM
                                                         : CellKind::SRNN;
  if (model->shape.kind != want)
    throw std::invalid_argument(name() + ": weights are for a " + to_string(model->shape.kind) +
                                " cell");
  if (model->shape.k_on != k_on || model->shape.input_size != 2 * k_on)
    throw std::invalid_argument(name() + ": model K_on " + std::to_string(model->shape.k_on) +
                                " does not match link K_on " + std::to_string(k_on));
  if (!model->weights.all_finite())
    throw std::invalid_argument(name() + ": model has non-finite weights");
  (void)frame_length;
}

Bits equalize_and_demap(const CMatrix &received, const CMatrix &h_hat, const PilotConfig &cfg,
                        const ModulationScheme &scheme) {
  if (received.rows() != h_hat.rows() || received.cols() != h_hat.cols() ||
      received.rows() != cfg.k_on || received.cols() != cfg.frame_length)
    throw std::invalid_argument("equalize_and_demap: shape mismatch");
  const CVector y = extract_data(received, cfg);
  const CVector h = extract_data(h_hat, cfg);
  CVector x(y.size());
  std::vector<bool> erased(static_cast<std::size_t>(y.size()), false);
  for (Eigen::Index n = 0; n < y.size(); ++n) {
    if (std::abs(h[n]) < 1e-12) {
      erased[static_cast<std::size_t>(n)] = true;
      x[n] = 0.0;
    } else {
      x[n] = y[n] / h[n];
    }
  }
  Bits bits = demap_symbols(x, scheme);
  const auto b = static_cast<std::size_t>(scheme.bits_per_symbol());
  for (std::size_t n = 0; n < erased.size(); ++n)
    if (erased[n])
      std::fill_n(bits.begin() + static_cast<std::ptrdiff_t>(n * b), b, std::uint8_t{0});
  return bits;
}

CMatrix run_estimator(const EstimatorChoice &est, const LinkSetup &link, const CMatrix &received,
                      double noise_var, const CMatrix &true_channel) {
  switch (est.kind) {
  case EstimatorKind::Perfect: return true_channel;
  case EstimatorKind::SLS_interp:
    return linear_interpolate(estimate_pilots(received, link.pilots, PilotMethod::SLS),
                              link.pilots);
  case EstimatorKind::ALS_WI: {
    const PilotEstimates p = estimate_pilots(received, link.pilots, PilotMethod::ALS, &link.basis);
    const double var = noise_var * link.basis.length() / link.basis.k_on();
    return wi_estimate(p, link.pilots, link.profile.normalized_doppler(), var);
  }
  case EstimatorKind::Bi_SRNN:
  case EstimatorKind::Bi_LSTM:
  case EstimatorKind::Bi_GRU: {
    if (!est.model)
      throw std::invalid_argument(est.name() + ": no model loaded");
    const PilotEstimates p = estimate_pilots(received, link.pilots, PilotMethod::ALS, &link.basis);
    return estimate_channel(*est.model, assemble_input(p, link.pilots));
  }
  }
  throw std::invalid_argument("run_estimator: invalid estimator");
}

SweepConfig SweepConfig::for_scenario(Mobility m, Modulation mod, const ChannelProfile &base) {
  const ScenarioParams sp = scenario(m);
  SweepConfig c;
  c.scenario_name = to_string(m);
  c.profile = base;
  c.profile.doppler_hz = sp.doppler_hz;
  c.pilot_count = sp.pilot_count;
  c.modulation = mod;
  return c;
}

namespace {

constexpr std::size_t kChunk = 1024;

struct ChunkSum {
  std::uint64_t errors = 0;
  double nmse = 0.0;
};

} // namespace

BerReport ber_sweep(const EstimatorChoice &est, const SweepConfig &cfg) {
  if (cfg.frames < 1)
    throw std::invalid_argument("ber_sweep: need at least one frame per SNR");
  if (cfg.snr_db.empty())
    throw std::invalid_argument("ber_sweep: empty SNR list");
  const LinkSetup link = LinkSetup::make(cfg.profile, cfg.frame_length, cfg.pilot_count,
                                         cfg.modulation, cfg.basis_length);
  est.validate(link.pilots.k_on, link.pilots.frame_length);
  const ModulationScheme &scheme = link.scheme();
  const std::uint64_t bits_per_frame = payload_length(link.pilots, scheme);

  BerReport report;
  report.estimator = est.name();
  report.scenario = cfg.scenario_name;
  report.scheme = to_string(cfg.modulation);

  const auto frames = static_cast<std::size_t>(cfg.frames);
  const std::size_t chunks = (frames + kChunk - 1) / kChunk;
  for (std::size_t s = 0; s < cfg.snr_db.size(); ++s) {
    const double snr = cfg.snr_db[s];
    // Noise streams are keyed by the SNR value so a point does not depend on
    // its position in the list.
    const auto snr_key = static_cast<std::uint64_t>(std::llround(snr * 1000.0) + (1LL << 40));
    BerPoint pt;
    pt.snr_db = snr;
    pt.frames = frames;
    pt.bits = bits_per_frame * frames;
    if (cfg.keep_frame_stats)
      pt.per_frame.resize(frames);
    std::vector<ChunkSum> sums(chunks);
    parallel_for(chunks, cfg.workers, [&](std::size_t c) {
      ChunkSum acc;
      const std::size_t end = std::min(frames, (c + 1) * kChunk);
      for (std::size_t f = c * kChunk; f < end; ++f) {
        Rng frame_rng = make_stream({cfg.seed, f, 0xf7});
        Rng noise_rng = make_stream({cfg.seed, f, snr_key, 0x9e});
        const FrameTrial t = simulate_frame(link, snr, frame_rng, noise_rng);
        const CMatrix h_hat = run_estimator(est, link, t.received, t.noise.sigma2, t.channel.H);
        const Bits bits = equalize_and_demap(t.received, h_hat, link.pilots, scheme);
        std::uint32_t err = 0;
        for (std::size_t b = 0; b < bits.size(); ++b)
          err += bits[b] != t.frame.payload_bits[b];
        const double e = est.kind == EstimatorKind::Perfect ? 0.0 : nmse(h_hat, t.channel.H);
        acc.errors += err;
        acc.nmse += e;
        if (cfg.keep_frame_stats)
          pt.per_frame[f] = {err, e};
      }
      sums[c] = acc;
    });
    double nmse_sum = 0.0;
    for (const ChunkSum &c : sums) {
      pt.errors += c.errors;
      nmse_sum += c.nmse;
    }
    pt.ber = static_cast<double>(pt.errors) / static_cast<double>(pt.bits);
    pt.nmse = nmse_sum / static_cast<double>(frames);
    report.points.push_back(std::move(pt));
  }
  return report;
}

double rayleigh_qpsk_reference(double snr_per_bit) {
  if (!(snr_per_bit >= 0.0))
    throw std::invalid_argument("rayleigh_qpsk_reference: SNR must be >= 0");
  if (std::isinf(snr_per_bit))
    return 0.0;
  return 0.5 * (1.0 - std::sqrt(snr_per_bit / (1.0 + snr_per_bit)));
}

std::string ber_csv(const std::vector<BerReport> &reports) {
  std::ostringstream out;
  out.precision(17);
  out << "estimator,scenario,scheme,snr_db,frames,bits,errors,ber,nmse\n";
  for (const BerReport &r : reports)
    for (const BerPoint &p : r.points)
      out << r.estimator << ',' << r.scenario << ',' << r.scheme << ',' << p.snr_db << ','
          << p.frames << ',' << p.bits << ',' << p.errors << ',' << p.ber << ',' << p.nmse << '\n';
  return out.str();
}

void write_ber_csv(const std::vector<BerReport> &reports, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << ber_csv(reports);
}

void write_plot_script(const std::filesystem::path &csv, const std::filesystem::path &script) {
  std::ofstream out(script, std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot write " + script.string());
  out << "#!/usr/bin/env python3\n"
         "import csv, sys\n"
         "from collections import defaultdict\n"
         "import matplotlib\n"
         "matplotlib.use('Agg')\n"
         "import matplotlib.pyplot as plt\n\n"
         "path = sys.argv[1] if len(sys.argv) > 1 else "
      << '\'' << csv.string() << '\''
      << "\n"
         "curves = defaultdict(list)\n"
         "with open(path) as f:\n"
         "    for row in csv.DictReader(f):\n"
         "        key = (row['estimator'], row['scenario'], row['scheme'])\n"
         "        curves[key].append((float(row['snr_db']), float(row['ber'])))\n"
         "fig, ax = plt.subplots()\n"
         "for (est, sc, sch), pts in sorted(curves.items()):\n"
         "    pts.sort()\n"
         "    ax.semilogy([p[0] for p in pts], [max(p[1], 1e-7) for p in pts], marker='o',\n"
         "                label=f'{est} ({sc}, {sch})')\n"
         "ax.set_xlabel('SNR [dB]')\n"
         "ax.set_ylabel('BER')\n"
         "ax.grid(True, which='both', alpha=0.3)\n"
         "ax.legend()\n"
         "fig.savefig(path.rsplit('.', 1)[0] + '.png', dpi=150)\n";
}

std::vector<double> parse_snr_list(std::string_view text) {
  auto number = [](std::string_view s) {
    std::string tmp(s);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tmp, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used == 0 || used != tmp.size())
      throw std::invalid_argument("bad SNR value: '" + tmp + "'");
    return v;
  };
  std::vector<double> out;
  if (text.find(':') != std::string_view::npos) {
    const auto a = text.find(':');
    const auto b = text.find(':', a + 1);
    if (b == std::string_view::npos)
      throw std::invalid_argument("SNR range must be start:step:stop");
    const double start = number(text.substr(0, a));
    const double step = number(text.substr(a + 1, b - a - 1));
    const double stop = number(text.substr(b + 1));
    if (step <= 0.0 || stop < start)
      throw std::invalid_argument("SNR range needs a positive step and stop >= start");
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long k = 0; k <= n; ++k)
      out.push_back(start + static_cast<double>(k) * step);
  } else {
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto comma = text.find(',', pos);
      const auto end = comma == std::string_view::npos ? text.size() : comma;
      out.push_back(number(text.substr(pos, end - pos)));
      if (comma == std::string_view::npos)
        break;
      pos = comma + 1;
    }
  }
  return out;
}

} // namespace birnn
