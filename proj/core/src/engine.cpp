// SPDX-License-Identifier: Apache-2.0
//
// fdmimo: system-level simulation toolkit for FD-MIMO downlink
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "fdmimo/engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <memory>
#include <numeric>

#include "fdmimo/codebook.hpp"
#include "fdmimo/layout.hpp"
#include "fdmimo/precoding.hpp"
#include "fdmimo/scheduler.hpp"

namespace fdmimo {

namespace {

constexpr double kDegToRad = M_PI / 180.0;
constexpr double kBeamKeyScale = 4.0; // beam elevations quantized to 0.25 deg

int beam_key(double el_deg) { return static_cast<int>(std::lround(el_deg * kBeamKeyScale)); }
double beam_key_el(int key) { return key / kBeamKeyScale; }

// sum_{k=0}^{n-1} exp(j*theta*k)
cplx geometric_phase_sum(double theta, int n) {
    const cplx step = std::polar(1.0, theta);
    cplx term(1.0, 0.0);
    cplx acc(0.0, 0.0);
    for (int k = 0; k < n; ++k) {
        acc += term;
        term *= step;
    }
    return acc;
}

Eigen::Matrix2cd hermitian_inverse_2x2(const Eigen::Matrix2cd& r) {
    const double a = r(0, 0).real();
    const double d = r(1, 1).real();
    const cplx b = r(0, 1);
    const double det = a * d - std::norm(b);
    Eigen::Matrix2cd inv;
    inv << d, -b, -std::conj(b), a;
    return inv / det;
}

// Keep `size` evenly spaced codewords of an n*o DFT codebook.
Codebook decimate_codebook(const Codebook& cb, int size) {
    if (size <= 0 || size >= cb.size()) {
        return cb;
    }
    if (cb.size() % size != 0) {
        throw ConfigError("config: codebook size must divide the DFT grid");
    }
    Codebook out;
    out.codewords.resize(cb.codewords.rows(), size);
    const int stride = cb.size() / size;
    for (int i = 0; i < size; ++i) {
        out.codewords.col(i) = cb.codewords.col(i * stride);
    }
    return out;
}

// Per-cluster projection data for fast beam responses: the response of a
// full-panel vertical beam at elevation el is
//   B(el) = sum_i a_i * hsum_i * sum_r exp(j*r*(vstep_i - 2*pi*dv*sin(el))).
struct ClusterProj {
    Eigen::Matrix2cd a;  // gain * polarization matrix (rx x txpol)
    double vstep = 0.0;  // conjugated vertical phase step of the cluster
    cplx hsum;           // horizontal sum at the beam azimuth (0 deg)
};

struct SubbandCsi {
    int index = 0;
    cplx co_phase = cplx(1.0, 0.0);
    double eff1 = 0.0;  // rank-1 layer efficiency
    double eff2a = 0.0; // rank-2 layer efficiencies
    double eff2b = 0.0;
    int cqi1 = 0;
    int cqi2a = 0;
    int cqi2b = 0;
};

struct EngineReport {
    bool valid = false;
    int measured_sf = 0;
    int rank = 1;
    std::vector<SubbandCsi> sb;
    std::vector<int> beam_keys; // grid snapshot the report was measured on
    int bits = 0;
};

struct TbState {
    double required_bits = 0.0;
    double acc_mi_bits = 0.0;
    double payload_bits = 0.0;
    int attempts = 0;
    int due_sf = 0;
};

struct FtpPacket {
    int arrival_sf = 0;
    double bits_left = 0.0;
    double bits_total = 0.0;
};

struct UeState {
    Eigen::Vector2d xy = Eigen::Vector2d::Zero();
    double height_m = 1.5;
    bool indoor = false;

    EngineReport active;
    EngineReport pending;
    int pending_apply_sf = -1;
    LongTermStats lt;
    LongTermStats lt_pending;
    int lt_apply_sf = -1;
    std::vector<int> beam_keys; // current short-term grid (class B / B2)

    std::vector<TbState> tbs;
    std::deque<FtpPacket> packets;
    double backlog_bits = 0.0; // not yet assigned to a transport block
    double delivered_bits = 0.0;
    std::vector<int> arrival_sfs;
    size_t arrival_pos = 0;

    // ideal-feedback cache (per subband): layer rows and squared singulars
    std::vector<Eigen::MatrixXcd> ideal_rows;
    std::vector<Eigen::Vector2d> ideal_sig2;
};

struct TxLayer {
    int ue = -1;
    Eigen::VectorXcd coef; // port coefficients (static) or basis coefficients
};

struct CellSbTx {
    bool active = false;
    std::vector<TxLayer> layers;
    std::vector<int> basis_keys; // dynamic basis: (key, pol0) then (key, pol1)
};

struct MemoEntry {
    int key;
    Eigen::Matrix2cd resp;
};

class DropSimulator {
public:
    DropSimulator(const SimConfig& cfg, uint64_t seed) : cfg_(cfg), seed_(seed) {}

    SimMetrics run();

private:
    // --- setup -----------------------------------------------------------
    void build_network();
    void build_codebooks();
    void drop_ues();
    void build_channels();
    void build_traffic();

    // --- per-subframe phases ----------------------------------------------
    void process_arrivals(int sf);
    void apply_pending(int sf);
    void measure_all(int sf);
    void measure_long_term(int ue, int sf);
    EngineReport measure_class_a(int ue, int sf);
    EngineReport measure_class_b(int ue, int sf);
    void schedule_cell(int cell, int sf);
    void evaluate_subframe(int sf);
    void finalize_metrics(SimMetrics& out);

    // --- helpers -----------------------------------------------------------
    int link_idx(int ue, int cell, int sb) const {
        return (ue * n_cells_ + cell) * n_sb_ + sb;
    }
    int serving_cell(int ue) const { return ue / cfg_.engine.ue_per_cell; }
    bool schedulable(const UeState& u, int sf) const;
    double data_re(int sb) const { return data_re_[static_cast<size_t>(sb)]; }

    const Eigen::Matrix2cd& beam_response(int ue, int cell, int sb, int key);
    Eigen::Vector2cd eval_layer(int ue, int cell, int sb, const CellSbTx& tx,
                                const TxLayer& layer);
    double adjusted_eff(double eff_layer, double power_share) const;
    double quantize_eff(double eff) const;
    void make_layer_rows(int ue, int sb, int rank, Eigen::MatrixXcd& rows,
                         std::vector<int>* keys) const;
    double direction_correlation(int ue_a, int ue_b, int sb) const;
    double estimate_rate_bits(int ue, int sb, int rank, double share) const;
    int report_rank(const UeState& u) const;

    const SimConfig& cfg_;
    uint64_t seed_;

    NetworkLayout layout_;
    ArrayGeometry geometry_;
    TxruArchitecture static_arch_;
    Eigen::MatrixXcd static_gram_;
    double static_gram_mean_diag_ = 1.0;
    bool dynamic_beams_ = false; // B2: per-UE adapted beams
    bool class_b_ = false;

    int n_cells_ = 0;
    int n_ue_ = 0;
    int n_sb_ = 0;
    int ports_ = 0;

    double tx_power_w_ = 0.0;
    double noise_w_ = 0.0;

    std::vector<Eigen::MatrixXcd> h_ports_;
    std::vector<double> frob2_;
    std::vector<std::vector<ClusterProj>> cproj_;
    std::vector<std::vector<MemoEntry>> beam_memo_;
    std::vector<double> i_avg_; // [ue*n_sb + sb]

    std::vector<UeState> ues_;
    std::vector<SchedulingState> pf_;
    std::vector<CellSbTx> tx_; // [cell*n_sb + sb]

    Codebook composite_;     // class A kron(V,H) part
    std::vector<cplx> cophase_set_;
    Codebook vertical_cb_;   // B2 long-term vertical codebook
    double gamma_v_eff_ = 1.0;
    BeamSet scheme_b_beams_; // informational (bits)

    OverheadLedger ledger_;
    std::vector<double> data_re_;
    std::vector<int> rb_per_sb_;

    // metrics accumulation
    long scheduled_units_ = 0;
    long total_units_ = 0;
    double energy_err_max_ = 0.0;
    double fb_bits_sum_ = 0.0;
    long fb_reports_ = 0;
    std::vector<double> packet_tputs_;
    long packets_done_ = 0;

    std::unique_ptr<CsvWriter> trace_fb_;
    std::unique_ptr<CsvWriter> trace_sched_;
};

void DropSimulator::build_network() {
    cfg_.validate();
    if ((cfg_.feedback.cls == FeedbackClass::B || cfg_.feedback.cls == FeedbackClass::B2) &&
        cfg_.feedback.n_b < 1) {
        throw ConfigError("engine: class-B feedback needs N_B >= 1");
    }

    layout_ = cfg_.debug.single_cell
                  ? NetworkLayout::single_cell(cfg_.scenario)
                  : NetworkLayout::build(cfg_.scenario, cfg_.engine.wraparound);
    geometry_ = build_array(cfg_.array);

    n_cells_ = layout_.n_cells();
    n_ue_ = n_cells_ * cfg_.engine.ue_per_cell;
    n_sb_ = cfg_.engine.subbands;

    class_b_ = cfg_.feedback.cls == FeedbackClass::B || cfg_.feedback.cls == FeedbackClass::B2;
    dynamic_beams_ = cfg_.feedback.cls == FeedbackClass::B2;

    const int p = cfg_.array.polarization;
    if (cfg_.feedback.cls == FeedbackClass::B && !cfg_.engine.ideal_feedback) {
        // scheme I: fixed uniform beam grid, beams replicated per polarization
        BeamGridConfig grid = cfg_.feedback.beam_grid;
        grid.n_beams = cfg_.feedback.n_b;
        std::vector<double> els = uniform_beam_elevations(grid);
        std::vector<Direction> dirs;
        for (int pol = 0; pol < p; ++pol) {
            for (double el : els) {
                dirs.push_back(Direction{0.0, beam_key_el(beam_key(el))});
            }
        }
        const int l = p * cfg_.feedback.n_b;
        static_arch_ = build_connected(geometry_, l, l / p, dirs);
    } else {
        // class A ports, B2 long-term ports, or the ideal-feedback basis
        if (cfg_.engine.ideal_feedback && cfg_.txru.kind == TxruKind::Connected) {
            BeamGridConfig grid = cfg_.feedback.beam_grid;
            grid.n_beams = cfg_.txru.l_txru / p;
            std::vector<double> els = uniform_beam_elevations(grid);
            std::vector<Direction> dirs;
            for (int pol = 0; pol < p; ++pol) {
                for (double el : els) {
                    dirs.push_back(Direction{0.0, el});
                }
            }
            static_arch_ = build_connected(geometry_, cfg_.txru.l_txru,
                                           cfg_.txru.l_txru / p, dirs);
        } else {
            const int k_v = cfg_.array.m_vertical / cfg_.txru.grid.n_v;
            const int k_h =
                cfg_.array.n_horizontal / (cfg_.txru.grid.n_h / cfg_.array.polarization);
            const Eigen::VectorXcd v = subarray_dft_weight(
                cfg_.array, k_v, k_h, Direction{0.0, -cfg_.txru.downtilt_deg});
            static_arch_ = build_partitioned(geometry_, cfg_.txru.grid, v);
        }
    }
    ports_ = static_arch_.l_txru;
    static_gram_ = static_arch_.w_t.adjoint() * static_arch_.w_t;
    static_gram_mean_diag_ = static_gram_.diagonal().real().mean();

    tx_power_w_ = std::pow(10.0, (cfg_.engine.tx_power_dbm - 30.0) / 10.0);
    noise_w_ = std::pow(10.0, (-174.0 + 10.0 * std::log10(cfg_.engine.bandwidth_hz) +
                               cfg_.engine.noise_figure_db - 30.0) /
                        10.0);

    // overhead ledger
    int csirs_res = 0;
    double extra = 0.0;
    if (cfg_.engine.ideal_feedback) {
        csirs_res = 0;
    } else if (cfg_.feedback.cls == FeedbackClass::A) {
        csirs_res = ports_;
    } else if (cfg_.feedback.cls == FeedbackClass::B) {
        csirs_res = cfg_.feedback.n_b;
    } else {
        csirs_res = cfg_.feedback.n_b;
        extra = static_cast<double>(ports_) * cfg_.feedback.report_period_ms /
                cfg_.feedback.long_term_period_ms;
    }
    ledger_ = OverheadLedger::make(cfg_.engine, csirs_res, cfg_.feedback.report_period_ms,
                                   extra);

    rb_per_sb_.assign(static_cast<size_t>(n_sb_), cfg_.engine.rb_total / n_sb_);
    for (int s = 0; s < cfg_.engine.rb_total % n_sb_; ++s) {
        rb_per_sb_[static_cast<size_t>(s)] += 1;
    }
    data_re_.resize(static_cast<size_t>(n_sb_));
    for (int s = 0; s < n_sb_; ++s) {
        data_re_[static_cast<size_t>(s)] =
            rb_per_sb_[static_cast<size_t>(s)] * kRePerRbSubframe * ledger_.data_fraction();
    }

    tx_.assign(static_cast<size_t>(n_cells_ * n_sb_), CellSbTx{});
    pf_.assign(static_cast<size_t>(n_cells_),
               SchedulingState(cfg_.engine.ue_per_cell, cfg_.engine.pf_window));

    if (cfg_.trace.scheduler) {
        trace_sched_ = std::make_unique<CsvWriter>(cfg_.trace.dir + "/scheduler_trace.csv");
        trace_sched_->comment("fdmimo scheduler trace");
        trace_sched_->header({"subframe", "cell", "subband", "ues", "ranks", "pf_metric"});
    }
    if (cfg_.trace.feedback) {
        trace_fb_ = std::make_unique<CsvWriter>(cfg_.trace.dir + "/feedback_trace.csv");
        trace_fb_->comment("fdmimo feedback trace");
        trace_fb_->header(
            {"subframe", "cell", "ue", "class", "rank", "index", "co_phase", "cqi", "bits"});
    }
}

void DropSimulator::build_codebooks() {
    if (cfg_.feedback.cls == FeedbackClass::A && !cfg_.engine.ideal_feedback) {
        const int nv = cfg_.txru.grid.n_v;
        const int nh = cfg_.txru.grid.n_h / cfg_.array.polarization;
        Codebook v = build_dft_codebook(nv, cfg_.feedback.v_oversampling);
        Codebook h = build_dft_codebook(nh, cfg_.feedback.h_oversampling);
        v = decimate_codebook(v, cfg_.feedback.v_codebook_size);
        h = decimate_codebook(h, cfg_.feedback.h_codebook_size);
        composite_ = kronecker_codebook(v, h);
        if (cfg_.feedback.cophase_bits == 2 && cfg_.array.polarization == 2) {
            cophase_set_ = {cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
        } else {
            cophase_set_ = {cplx(1, 0)};
        }
    }
    if (dynamic_beams_) {
        const int nv = cfg_.txru.grid.n_v;
        vertical_cb_ = build_dft_codebook(nv, cfg_.feedback.v_oversampling);
        gamma_v_eff_ = (cfg_.array.m_vertical / nv) * cfg_.array.dv_lambda;
    }
    if (class_b_) {
        BeamGridConfig grid = cfg_.feedback.beam_grid;
        grid.n_beams = cfg_.feedback.n_b;
        std::vector<double> els = uniform_beam_elevations(grid);
        scheme_b_beams_.beams.resize(cfg_.feedback.n_b, cfg_.feedback.n_b);
        scheme_b_beams_.beams.setIdentity(); // placeholder; bits() only needs the count
    }
}

void DropSimulator::drop_ues() {
    ues_.resize(static_cast<size_t>(n_ue_));
    for (int u = 0; u < n_ue_; ++u) {
        UeState& ue = ues_[static_cast<size_t>(u)];
        const int cell = serving_cell(u);
        auto rng = make_rng(seed_, kStreamUeDrop, static_cast<uint64_t>(u));
        if (cfg_.debug.fixed_ue) {
            ue.xy = layout_.cell(cell).site_xy +
                    Eigen::Vector2d(cfg_.debug.ue_x_m, cfg_.debug.ue_y_m);
            ue.height_m = cfg_.debug.ue_height_m;
            ue.indoor = false;
        } else {
            ue.xy = layout_.drop_in_sector(cell, cfg_.scenario.min_bs_ue_distance_m, rng);
            ue.indoor = rng.uniform() < cfg_.scenario.indoor_fraction;
            if (ue.indoor) {
                const int floor = 1 + static_cast<int>(rng.below(
                                          static_cast<uint32_t>(cfg_.scenario.max_floor)));
                ue.height_m = 1.5 + 3.0 * (floor - 1);
            } else {
                ue.height_m = 1.5;
            }
        }
        if (class_b_) {
            BeamGridConfig grid = cfg_.feedback.beam_grid;
            grid.n_beams = cfg_.feedback.n_b;
            ue.beam_keys.clear();
            for (double el : uniform_beam_elevations(grid)) {
                ue.beam_keys.push_back(beam_key(el));
            }
        }
    }
}

void DropSimulator::build_channels() {
    const size_t n_links = static_cast<size_t>(n_ue_) * n_cells_ * n_sb_;
    h_ports_.resize(n_links);
    frob2_.assign(n_links, 0.0);
    if (dynamic_beams_) {
        cproj_.resize(n_links);
        beam_memo_.resize(n_links);
    }
    i_avg_.assign(static_cast<size_t>(n_ue_) * n_sb_, 0.0);

    ChannelOptions opts;
    opts.n_rx = cfg_.engine.rx_antennas;
    opts.element_pattern = cfg_.element_pattern;

    const int m = cfg_.array.m_vertical;
    const int n = cfg_.array.n_horizontal;

    for (int u = 0; u < n_ue_; ++u) {
        UeState& ue = ues_[static_cast<size_t>(u)];
        for (int c = 0; c < n_cells_; ++c) {
            const RelativeGeometry rel = layout_.relative(c, ue.xy);
            UePosition local;
            local.x_m = rel.local_xy.x();
            local.y_m = rel.local_xy.y();
            local.height_m = ue.height_m;
            local.indoor = ue.indoor;

            auto ls_rng = make_rng(seed_, kStreamLinkState, static_cast<uint64_t>(c),
                                   static_cast<uint64_t>(u));
            LinkState link = draw_link_state(cfg_.scenario, local, ls_rng);
            if (cfg_.debug.force_los) {
                link.los = true;
            }

            for (int sb = 0; sb < n_sb_; ++sb) {
                auto ch_rng = make_rng(seed_, kStreamClusters, static_cast<uint64_t>(c),
                                       static_cast<uint64_t>(u), static_cast<uint64_t>(sb));
                const ChannelRealization ch =
                    generate_channel(geometry_, cfg_.scenario, local, ch_rng, opts, &link);
                const int idx = link_idx(u, c, sb);
                h_ports_[static_cast<size_t>(idx)] = ch.port_channel(static_arch_);

                double f2 = 0.0;
                for (const Cluster& cl : ch.clusters) {
                    f2 += std::norm(cl.gain) * cl.pol.squaredNorm();
                }
                f2 *= ch.applied_amplitude * ch.applied_amplitude * m * n;
                frob2_[static_cast<size_t>(idx)] = f2;

                if (dynamic_beams_) {
                    auto& list = cproj_[static_cast<size_t>(idx)];
                    list.reserve(ch.clusters.size());
                    for (const Cluster& cl : ch.clusters) {
                        ClusterProj cp;
                        cp.a = ch.applied_amplitude * cl.gain * cl.pol;
                        cp.vstep = 2.0 * M_PI * cfg_.array.dv_lambda *
                                   cl.dir.vertical_cosine();
                        const double hstep = 2.0 * M_PI * cfg_.array.dh_lambda *
                                             cl.dir.horizontal_cosine();
                        cp.hsum = geometric_phase_sum(hstep, n);
                        list.push_back(cp);
                    }
                }
            }
        }
    }

    // average other-cell interference (full-power, direction-averaged)
    for (int u = 0; u < n_ue_; ++u) {
        const int c0 = serving_cell(u);
        for (int sb = 0; sb < n_sb_; ++sb) {
            double acc = 0.0;
            for (int c = 0; c < n_cells_; ++c) {
                if (c == c0 || cfg_.debug.disable_interference) {
                    continue;
                }
                acc += tx_power_w_ * frob2_[static_cast<size_t>(link_idx(u, c, sb))] /
                       cfg_.array.n_elements();
            }
            i_avg_[static_cast<size_t>(u) * n_sb_ + sb] = acc;
        }
    }

    // ideal feedback: cache per-subband singular decompositions
    if (cfg_.engine.ideal_feedback) {
        for (int u = 0; u < n_ue_; ++u) {
            UeState& ue = ues_[static_cast<size_t>(u)];
            ue.ideal_rows.resize(static_cast<size_t>(n_sb_));
            ue.ideal_sig2.resize(static_cast<size_t>(n_sb_));
            for (int sb = 0; sb < n_sb_; ++sb) {
                const Eigen::MatrixXcd& h =
                    h_ports_[static_cast<size_t>(link_idx(u, serving_cell(u), sb))];
                Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
                    h, Eigen::ComputeThinU | Eigen::ComputeThinV);
                const int r = static_cast<int>(svd.singularValues().size());
                Eigen::MatrixXcd rows(r, ports_);
                Eigen::Vector2d sig2 = Eigen::Vector2d::Zero();
                for (int i = 0; i < r; ++i) {
                    rows.row(i) = svd.singularValues()(i) * svd.matrixV().col(i).adjoint();
                    if (i < 2) {
                        sig2(i) = svd.singularValues()(i) * svd.singularValues()(i);
                    }
                }
                ue.ideal_rows[static_cast<size_t>(sb)] = rows;
                ue.ideal_sig2[static_cast<size_t>(sb)] = sig2;
            }
        }
    }

    if (cfg_.trace.channel) {
        CsvWriter dump(cfg_.trace.dir + "/channel_dump.csv");
        dump.comment("fdmimo channel dump: TXRU-domain coefficients");
        std::vector<std::string> cols = {"drop", "cell", "ue", "subband"};
        for (int r = 0; r < cfg_.engine.rx_antennas; ++r) {
            for (int p = 0; p < ports_; ++p) {
                cols.push_back("h" + std::to_string(r) + "_" + std::to_string(p) + "_re");
                cols.push_back("h" + std::to_string(r) + "_" + std::to_string(p) + "_im");
            }
        }
        dump.header(cols);
        for (int u = 0; u < n_ue_; ++u) {
            for (int sb = 0; sb < n_sb_; ++sb) {
                const Eigen::MatrixXcd& h =
                    h_ports_[static_cast<size_t>(link_idx(u, serving_cell(u), sb))];
                std::vector<double> row = {0.0, static_cast<double>(serving_cell(u)),
                                           static_cast<double>(u), static_cast<double>(sb)};
                for (int r = 0; r < h.rows(); ++r) {
                    for (int p = 0; p < h.cols(); ++p) {
                        row.push_back(h(r, p).real());
                        row.push_back(h(r, p).imag());
                    }
                }
                dump.row_numeric(row);
            }
        }
    }
}

void DropSimulator::build_traffic() {
    if (cfg_.traffic.model != TrafficConfig::Model::Ftp) {
        return;
    }
    const double horizon_s = cfg_.engine.subframes * 1e-3;
    for (int u = 0; u < n_ue_; ++u) {
        auto rng = make_rng(seed_, kStreamTraffic, static_cast<uint64_t>(u));
        double t = 0.0;
        while (true) {
            t += rng.exponential(cfg_.traffic.arrival_rate_hz);
            if (t >= horizon_s) {
                break;
            }
            ues_[static_cast<size_t>(u)].arrival_sfs.push_back(
                static_cast<int>(t * 1000.0));
        }
    }
}

void DropSimulator::process_arrivals(int sf) {
    if (cfg_.traffic.model != TrafficConfig::Model::Ftp) {
        return;
    }
    const double bits = cfg_.traffic.packet_bytes * 8.0;
    for (auto& ue : ues_) {
        while (ue.arrival_pos < ue.arrival_sfs.size() &&
               ue.arrival_sfs[ue.arrival_pos] <= sf) {
            ue.packets.push_back(FtpPacket{ue.arrival_sfs[ue.arrival_pos], bits, bits});
            ue.backlog_bits += bits;
            ++ue.arrival_pos;
        }
    }
}

void DropSimulator::apply_pending(int sf) {
    for (auto& ue : ues_) {
        if (ue.pending_apply_sf >= 0 && sf >= ue.pending_apply_sf) {
            ue.active = ue.pending;
            ue.pending_apply_sf = -1;
        }
        if (ue.lt_apply_sf >= 0 && sf >= ue.lt_apply_sf) {
            ue.lt = ue.lt_pending;
            ue.lt_apply_sf = -1;
            if (dynamic_beams_ && ue.lt.valid) {
                BeamGridConfig grid = cfg_.feedback.beam_grid;
                grid.n_beams = cfg_.feedback.n_b;
                const double dircos = std::min(1.0, std::max(-1.0, ue.lt.v_dircos));
                const double center = std::asin(dircos) / kDegToRad;
                ue.beam_keys.clear();
                for (double el : recentered_beam_elevations(grid, center)) {
                    ue.beam_keys.push_back(beam_key(el));
                }
            }
        }
        if (ue.active.valid) {
            ue.active.bits = ue.active.bits; // age tracked below
        }
    }
}

const Eigen::Matrix2cd& DropSimulator::beam_response(int ue, int cell, int sb, int key) {
    auto& memo = beam_memo_[static_cast<size_t>(link_idx(ue, cell, sb))];
    for (const MemoEntry& e : memo) {
        if (e.key == key) {
            return e.resp;
        }
    }
    const double beam_step =
        2.0 * M_PI * cfg_.array.dv_lambda * std::sin(beam_key_el(key) * kDegToRad);
    Eigen::Matrix2cd resp = Eigen::Matrix2cd::Zero();
    for (const ClusterProj& cp : cproj_[static_cast<size_t>(link_idx(ue, cell, sb))]) {
        const cplx v = geometric_phase_sum(cp.vstep - beam_step, cfg_.array.m_vertical);
        resp += (cp.hsum * v) * cp.a;
    }
    memo.push_back(MemoEntry{key, resp});
    return memo.back().resp;
}

double DropSimulator::quantize_eff(double eff) const {
    if (!cfg_.engine.quantize_cqi) {
        return eff;
    }
    const auto& t = CqiTable::lte().efficiency;
    double q = 0.0;
    for (double v : t) {
        if (v <= eff) {
            q = v;
        }
    }
    return q;
}

double DropSimulator::adjusted_eff(double eff_layer, double power_share) const {
    if (eff_layer <= 0.0) {
        return 0.0;
    }
    const double sinr = power_share * efficiency_to_sinr(eff_layer);
    return quantize_eff(std::min(std::log2(1.0 + sinr), CqiTable::lte().cap));
}

bool DropSimulator::schedulable(const UeState& u, int sf) const {
    if (!cfg_.engine.ideal_feedback && !u.active.valid) {
        return false;
    }
    if (cfg_.traffic.model == TrafficConfig::Model::FullBuffer) {
        return true;
    }
    if (u.backlog_bits > 0.0) {
        return true;
    }
    for (const TbState& tb : u.tbs) {
        if (tb.due_sf <= sf) {
            return true;
        }
    }
    return false;
}

// Measured port matrix with CSI-RS estimation noise.
static Eigen::MatrixXcd add_pilot_noise(const Eigen::MatrixXcd& h, double err_var,
                                        Philox4x32& rng) {
    Eigen::MatrixXcd out = h;
    const double s = std::sqrt(err_var);
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
        for (Eigen::Index r = 0; r < out.rows(); ++r) {
            out(r, c) += s * rng.cnormal();
        }
    }
    return out;
}

EngineReport DropSimulator::measure_class_a(int ue, int sf) {
    EngineReport rep;
    rep.measured_sf = sf;
    rep.sb.resize(static_cast<size_t>(n_sb_));
    const int c0 = serving_cell(ue);
    auto rng = make_rng(seed_, kStreamCsiNoise, static_cast<uint64_t>(ue),
                        static_cast<uint64_t>(sf));

    const double pilot_power = tx_power_w_ / ports_;
    const int n_kron = composite_.size();
    const int n_cop = static_cast<int>(cophase_set_.size());
    const int copol_len = composite_.n_ports();

    double sum1 = 0.0;
    double sum2 = 0.0;
    for (int sb = 0; sb < n_sb_; ++sb) {
        const double in = i_avg_[static_cast<size_t>(ue) * n_sb_ + sb] + noise_w_;
        Eigen::MatrixXcd hp = h_ports_[static_cast<size_t>(link_idx(ue, c0, sb))];
        if (!cfg_.engine.ideal_channel_estimation) {
            hp = add_pilot_noise(hp, in / pilot_power, rng);
        }

        // joint search over composite codeword and co-phase
        int best_i = 0;
        int best_cop = 0;
        double best_m = -1.0;
        for (int i = 0; i < n_kron; ++i) {
            const Eigen::VectorXcd base = composite_.codewords.col(i);
            for (int cp = 0; cp < n_cop; ++cp) {
                Eigen::VectorXcd w;
                if (cfg_.array.polarization == 2) {
                    w = dualpol_codeword(base, cophase_set_[static_cast<size_t>(cp)]);
                } else {
                    w = base;
                }
                const double metric = (hp * w).squaredNorm();
                if (metric > best_m) {
                    best_m = metric;
                    best_i = i;
                    best_cop = cp;
                }
            }
        }

        SubbandCsi& csi = rep.sb[static_cast<size_t>(sb)];
        csi.index = best_i * n_cop + best_cop;
        csi.co_phase = cophase_set_[static_cast<size_t>(best_cop)];

        const Eigen::VectorXcd base = composite_.codewords.col(best_i);
        Eigen::VectorXcd w1 =
            cfg_.array.polarization == 2 ? dualpol_codeword(base, csi.co_phase) : base;

        // rank 1: full power on one layer
        const double a1 = std::sqrt(tx_power_w_ / static_gram_mean_diag_);
        const Eigen::Vector2cd h1 = a1 * (hp * w1);
        const double sinr1 = h1.squaredNorm() / in;
        csi.eff1 = quantize_eff(std::min(std::log2(1.0 + sinr1), CqiTable::lte().cap));
        csi.cqi1 = compute_cqi(10.0 * std::log10(std::max(sinr1, 1e-30))).index;
        sum1 += csi.eff1;

        // rank 2: orthogonal co-phase pair, half power per layer
        if (cfg_.engine.rx_antennas == 2 && cfg_.engine.max_rank_per_ue == 2 &&
            cfg_.array.polarization == 2) {
            const Eigen::VectorXcd w2 = dualpol_codeword(base, -csi.co_phase);
            const double a2 = std::sqrt(tx_power_w_ / (2.0 * static_gram_mean_diag_));
            const Eigen::Vector2cd g1 = a2 * (hp * w1);
            const Eigen::Vector2cd g2 = a2 * (hp * w2);
            Eigen::Matrix2cd r_tot = in * Eigen::Matrix2cd::Identity();
            r_tot += g1 * g1.adjoint() + g2 * g2.adjoint();
            const Eigen::Matrix2cd r_inv = hermitian_inverse_2x2(r_tot);
            const double q1 = std::real((g1.adjoint() * r_inv * g1)(0, 0));
            const double q2 = std::real((g2.adjoint() * r_inv * g2)(0, 0));
            const double s1 = q1 / std::max(1e-12, 1.0 - q1);
            const double s2 = q2 / std::max(1e-12, 1.0 - q2);
            csi.eff2a = quantize_eff(std::min(std::log2(1.0 + s1), CqiTable::lte().cap));
            csi.eff2b = quantize_eff(std::min(std::log2(1.0 + s2), CqiTable::lte().cap));
            csi.cqi2a = compute_cqi(10.0 * std::log10(std::max(s1, 1e-30))).index;
            csi.cqi2b = compute_cqi(10.0 * std::log10(std::max(s2, 1e-30))).index;
            sum2 += csi.eff2a + csi.eff2b;
        }
    }

    rep.rank = (sum2 > sum1) ? 2 : 1;
    const int rank_bits = (cfg_.engine.max_rank_per_ue == 2) ? 1 : 0;
    const int pmi_bits = composite_.bits() + (n_cop > 1 ? 2 : 0);
    const int cqi_bits = 4 * n_sb_ * rep.rank;
    rep.bits = rank_bits + pmi_bits * n_sb_ + cqi_bits;
    rep.valid = true;
    return rep;
}

EngineReport DropSimulator::measure_class_b(int ue, int sf) {
    EngineReport rep;
    rep.measured_sf = sf;
    rep.sb.resize(static_cast<size_t>(n_sb_));
    rep.beam_keys = ues_[static_cast<size_t>(ue)].beam_keys;
    const int c0 = serving_cell(ue);
    const int n_b = cfg_.feedback.n_b;
    auto rng = make_rng(seed_, kStreamCsiNoise, static_cast<uint64_t>(ue),
                        static_cast<uint64_t>(sf));

    const double pilot_power = tx_power_w_ / n_b;
    const double elem_norm2 =
        static_cast<double>(cfg_.array.m_vertical) * cfg_.array.n_horizontal;

    double sum1 = 0.0;
    double sum2 = 0.0;
    for (int sb = 0; sb < n_sb_; ++sb) {
        const double in = i_avg_[static_cast<size_t>(ue) * n_sb_ + sb] + noise_w_;
        const double err_var =
            cfg_.engine.ideal_channel_estimation ? 0.0 : in / pilot_power;
        const double err_s = std::sqrt(err_var);

        // per-beam 2x2 (rx x pol) responses, with estimation noise
        std::vector<Eigen::Matrix2cd> resp(static_cast<size_t>(n_b));
        for (int b = 0; b < n_b; ++b) {
            Eigen::Matrix2cd r;
            if (dynamic_beams_) {
                r = beam_response(ue, c0, sb, rep.beam_keys[static_cast<size_t>(b)]);
            } else {
                const Eigen::MatrixXcd& hp =
                    h_ports_[static_cast<size_t>(link_idx(ue, c0, sb))];
                r.col(0) = hp.col(b);
                r.col(1) = hp.col(n_b + b);
            }
            if (err_var > 0.0) {
                for (int j = 0; j < 2; ++j) {
                    for (int i = 0; i < 2; ++i) {
                        r(i, j) += err_s * rng.cnormal();
                    }
                }
            }
            resp[static_cast<size_t>(b)] = r;
        }

        int best_b = 0;
        double best_m = -1.0;
        for (int b = 0; b < n_b; ++b) {
            const double m = resp[static_cast<size_t>(b)].squaredNorm();
            if (m > best_m) {
                best_m = m;
                best_b = b;
            }
        }

        SubbandCsi& csi = rep.sb[static_cast<size_t>(sb)];
        csi.index = best_b;

        const Eigen::Matrix2cd& rb = resp[static_cast<size_t>(best_b)];
        static const cplx qpsk[4] = {cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
        double best_cm = -1.0;
        for (const cplx& c : qpsk) {
            const double m = (rb.col(0) + c * rb.col(1)).squaredNorm();
            if (m > best_cm) {
                best_cm = m;
                csi.co_phase = c;
            }
        }
        if (cfg_.feedback.cophase_bits == 0 || cfg_.array.polarization == 1) {
            csi.co_phase = cplx(1.0, 0.0);
        }

        // rank 1: layer [v; c v]/sqrt(2), element-domain power to tx_power
        const double a1 = std::sqrt(tx_power_w_ / elem_norm2);
        const Eigen::Vector2cd h1 =
            a1 * (rb.col(0) + csi.co_phase * rb.col(1)) / std::sqrt(2.0);
        const double sinr1 = h1.squaredNorm() / in;
        csi.eff1 = quantize_eff(std::min(std::log2(1.0 + sinr1), CqiTable::lte().cap));
        csi.cqi1 = compute_cqi(10.0 * std::log10(std::max(sinr1, 1e-30))).index;
        sum1 += csi.eff1;

        if (cfg_.engine.rx_antennas == 2 && cfg_.engine.max_rank_per_ue == 2 &&
            cfg_.array.polarization == 2 && cfg_.feedback.cophase_bits > 0) {
            const double a2 = std::sqrt(tx_power_w_ / (2.0 * elem_norm2));
            const Eigen::Vector2cd g1 =
                a2 * (rb.col(0) + csi.co_phase * rb.col(1)) / std::sqrt(2.0);
            const Eigen::Vector2cd g2 =
                a2 * (rb.col(0) - csi.co_phase * rb.col(1)) / std::sqrt(2.0);
            Eigen::Matrix2cd r_tot = in * Eigen::Matrix2cd::Identity();
            r_tot += g1 * g1.adjoint() + g2 * g2.adjoint();
            const Eigen::Matrix2cd r_inv = hermitian_inverse_2x2(r_tot);
            const double q1 = std::real((g1.adjoint() * r_inv * g1)(0, 0));
            const double q2 = std::real((g2.adjoint() * r_inv * g2)(0, 0));
            const double s1 = q1 / std::max(1e-12, 1.0 - q1);
            const double s2 = q2 / std::max(1e-12, 1.0 - q2);
            csi.eff2a = quantize_eff(std::min(std::log2(1.0 + s1), CqiTable::lte().cap));
            csi.eff2b = quantize_eff(std::min(std::log2(1.0 + s2), CqiTable::lte().cap));
            csi.cqi2a = compute_cqi(10.0 * std::log10(std::max(s1, 1e-30))).index;
            csi.cqi2b = compute_cqi(10.0 * std::log10(std::max(s2, 1e-30))).index;
            sum2 += csi.eff2a + csi.eff2b;
        }
    }

    rep.rank = (sum2 > sum1) ? 2 : 1;
    const int rank_bits = (cfg_.engine.max_rank_per_ue == 2) ? 1 : 0;
    int bi_bits = 0;
    while ((1 << bi_bits) < n_b) ++bi_bits;
    const int cop_bits = (rep.rank == 2) ? cfg_.feedback.cophase_bits : 0;
    rep.bits = rank_bits + bi_bits * n_sb_ + cop_bits + 4 * n_sb_ * rep.rank;
    rep.valid = true;
    return rep;
}

void DropSimulator::measure_long_term(int ue, int sf) {
    const int c0 = serving_cell(ue);
    const int nv = cfg_.txru.grid.n_v;
    const int nhg = cfg_.txru.grid.n_h / cfg_.array.polarization;
    auto rng = make_rng(seed_, kStreamCsiNoise, static_cast<uint64_t>(ue),
                        static_cast<uint64_t>(sf), uint64_t{1});
    const double pilot_power = tx_power_w_ / ports_;

    Eigen::MatrixXcd cov = Eigen::MatrixXcd::Zero(nv, nv);
    for (int sb = 0; sb < n_sb_; ++sb) {
        const double in = i_avg_[static_cast<size_t>(ue) * n_sb_ + sb] + noise_w_;
        Eigen::MatrixXcd hp = h_ports_[static_cast<size_t>(link_idx(ue, c0, sb))];
        if (!cfg_.engine.ideal_channel_estimation) {
            hp = add_pilot_noise(hp, in / pilot_power, rng);
        }
        for (int r = 0; r < hp.rows(); ++r) {
            for (int pol = 0; pol < cfg_.array.polarization; ++pol) {
                for (int hg = 0; hg < nhg; ++hg) {
                    Eigen::VectorXcd v(nv);
                    for (int vg = 0; vg < nv; ++vg) {
                        v(vg) = hp(r, pol * (nv * nhg) + vg * nhg + hg);
                    }
                    cov += v * v.adjoint();
                }
            }
        }
    }

    int best = 0;
    double best_m = -1.0;
    for (int i = 0; i < vertical_cb_.size(); ++i) {
        const Eigen::VectorXcd w = vertical_cb_.codewords.col(i);
        const double m = std::real((w.adjoint() * cov * w)(0, 0));
        if (m > best_m) {
            best_m = m;
            best = i;
        }
    }

    UeState& u = ues_[static_cast<size_t>(ue)];
    u.lt_pending.valid = true;
    u.lt_pending.v_pmi = best;
    u.lt_pending.v_dircos =
        dft_index_to_dircos(best, cfg_.txru.grid.n_v, cfg_.feedback.v_oversampling,
                            gamma_v_eff_);
    u.lt_apply_sf = sf + cfg_.feedback.delay_ms;
}

void DropSimulator::measure_all(int sf) {
    if (cfg_.engine.ideal_feedback) {
        return;
    }
    for (int ue = 0; ue < n_ue_; ++ue) {
        UeState& u = ues_[static_cast<size_t>(ue)];
        EngineReport rep;
        if (cfg_.feedback.cls == FeedbackClass::A) {
            rep = measure_class_a(ue, sf);
        } else {
            rep = measure_class_b(ue, sf);
        }
        u.pending = rep;
        u.pending_apply_sf = sf + cfg_.feedback.delay_ms;
        fb_bits_sum_ += rep.bits;
        ++fb_reports_;

        if (trace_fb_) {
            const SubbandCsi& c0 = rep.sb[0];
            const char* cls = cfg_.feedback.cls == FeedbackClass::A ? "A"
                              : cfg_.feedback.cls == FeedbackClass::B ? "B" : "B2";
            std::string cop = "1";
            if (c0.co_phase.imag() > 0.5) cop = "j";
            if (c0.co_phase.real() < -0.5) cop = "-1";
            if (c0.co_phase.imag() < -0.5) cop = "-j";
            trace_fb_->row({std::to_string(sf), std::to_string(serving_cell(ue)),
                            std::to_string(ue), cls, std::to_string(rep.rank),
                            std::to_string(c0.index), cop, std::to_string(c0.cqi1),
                            std::to_string(rep.bits)});
        }
    }
}

// Quantized (or ideal) per-layer directions for SLNR, as rows. For dynamic
// beams the rows are expressed on the per-subband basis assembled later, so
// here we return the beam keys instead.
void DropSimulator::make_layer_rows(int ue, int sb, int rank, Eigen::MatrixXcd& rows,
                                    std::vector<int>* keys) const {
    const UeState& u = ues_[static_cast<size_t>(ue)];
    if (cfg_.engine.ideal_feedback) {
        const Eigen::MatrixXcd& r = u.ideal_rows[static_cast<size_t>(sb)];
        rows = r.topRows(std::min<int>(rank, static_cast<int>(r.rows())));
        return;
    }
    const SubbandCsi& csi = u.active.sb[static_cast<size_t>(sb)];
    if (cfg_.feedback.cls == FeedbackClass::A) {
        const int n_cop = static_cast<int>(cophase_set_.size());
        const Eigen::VectorXcd base = composite_.codewords.col(csi.index / n_cop);
        rows.resize(rank, ports_);
        const Eigen::VectorXcd w1 = cfg_.array.polarization == 2
                                        ? dualpol_codeword(base, csi.co_phase)
                                        : base;
        rows.row(0) = w1.adjoint();
        if (rank == 2) {
            rows.row(1) = dualpol_codeword(base, -csi.co_phase).adjoint();
        }
        return;
    }
    if (!dynamic_beams_) {
        // scheme I: beams are static ports (pol-major)
        const int n_b = cfg_.feedback.n_b;
        rows = Eigen::MatrixXcd::Zero(rank, ports_);
        const double s = 1.0 / std::sqrt(2.0);
        rows(0, csi.index) = s;
        rows(0, n_b + csi.index) = s * std::conj(csi.co_phase);
        if (rank == 2) {
            rows(1, csi.index) = s;
            rows(1, n_b + csi.index) = -s * std::conj(csi.co_phase);
        }
        return;
    }
    // dynamic: caller assembles the basis from beam keys
    rows.resize(rank, 2);
    const double s = 1.0 / std::sqrt(2.0);
    rows(0, 0) = s;
    rows(0, 1) = s * std::conj(csi.co_phase);
    if (rank == 2) {
        rows(1, 0) = s;
        rows(1, 1) = -s * std::conj(csi.co_phase);
    }
    if (keys != nullptr) {
        keys->push_back(u.active.beam_keys[static_cast<size_t>(csi.index)]);
    }
}

double DropSimulator::direction_correlation(int ue_a, int ue_b, int sb) const {
    const UeState& a = ues_[static_cast<size_t>(ue_a)];
    const UeState& b = ues_[static_cast<size_t>(ue_b)];
    if (cfg_.engine.ideal_feedback) {
        const Eigen::VectorXcd va = a.ideal_rows[static_cast<size_t>(sb)].row(0).adjoint();
        const Eigen::VectorXcd vb = b.ideal_rows[static_cast<size_t>(sb)].row(0).adjoint();
        return std::abs(va.dot(vb)) / std::max(1e-30, va.norm() * vb.norm());
    }
    const SubbandCsi& ca = a.active.sb[static_cast<size_t>(sb)];
    const SubbandCsi& cb = b.active.sb[static_cast<size_t>(sb)];
    if (cfg_.feedback.cls == FeedbackClass::A) {
        const int n_cop = static_cast<int>(cophase_set_.size());
        const Eigen::VectorXcd wa = composite_.codewords.col(ca.index / n_cop);
        const Eigen::VectorXcd wb = composite_.codewords.col(cb.index / n_cop);
        const double base = std::abs(wa.dot(wb));
        const double cop =
            0.5 * std::abs(1.0 + std::conj(ca.co_phase) * cb.co_phase);
        return cfg_.array.polarization == 2 ? base * cop : base;
    }
    const int key_a = dynamic_beams_
                          ? a.active.beam_keys[static_cast<size_t>(ca.index)]
                          : beam_key(uniform_beam_elevations(
                                [&] {
                                    BeamGridConfig g = cfg_.feedback.beam_grid;
                                    g.n_beams = cfg_.feedback.n_b;
                                    return g;
                                }())[static_cast<size_t>(ca.index)]);
    const int key_b = dynamic_beams_
                          ? b.active.beam_keys[static_cast<size_t>(cb.index)]
                          : beam_key(uniform_beam_elevations(
                                [&] {
                                    BeamGridConfig g = cfg_.feedback.beam_grid;
                                    g.n_beams = cfg_.feedback.n_b;
                                    return g;
                                }())[static_cast<size_t>(cb.index)]);
    const int m = cfg_.array.m_vertical;
    const double da = 2.0 * M_PI * cfg_.array.dv_lambda *
                      (std::sin(beam_key_el(key_b) * kDegToRad) -
                       std::sin(beam_key_el(key_a) * kDegToRad));
    const double vcorr = std::abs(geometric_phase_sum(-da, m)) / m;
    const double cop = 0.5 * std::abs(1.0 + std::conj(ca.co_phase) * cb.co_phase);
    return vcorr * cop;
}

double DropSimulator::estimate_rate_bits(int ue, int sb, int rank, double share) const {
    const UeState& u = ues_[static_cast<size_t>(ue)];
    if (cfg_.engine.ideal_feedback) {
        const Eigen::Vector2d& sig2 = u.ideal_sig2[static_cast<size_t>(sb)];
        const double in = i_avg_[static_cast<size_t>(ue) * n_sb_ + sb] + noise_w_;
        double eff = 0.0;
        for (int l = 0; l < rank; ++l) {
            const double p_elem =
                share * tx_power_w_ / (rank * static_gram_mean_diag_);
            const double sinr = p_elem * sig2(l) / in;
            eff += quantize_eff(std::min(std::log2(1.0 + sinr), CqiTable::lte().cap));
        }
        return cfg_.engine.mcs_backoff * eff * data_re(sb);
    }
    const SubbandCsi& csi = u.active.sb[static_cast<size_t>(sb)];
    double eff = 0.0;
    if (rank == 1) {
        eff = adjusted_eff(csi.eff1, share);
    } else {
        eff = adjusted_eff(csi.eff2a, share) + adjusted_eff(csi.eff2b, share);
    }
    return cfg_.engine.mcs_backoff * eff * data_re(sb);
}

int DropSimulator::report_rank(const UeState& u) const {
    if (cfg_.engine.ideal_feedback) {
        return 1; // replaced per subband by the singular-value test
    }
    return u.active.rank;
}

void DropSimulator::schedule_cell(int cell, int sf) {
    const int k = cfg_.engine.ue_per_cell;
    const int base = cell * k;

    std::vector<int> cands; // local UE indices
    for (int i = 0; i < k; ++i) {
        if (schedulable(ues_[static_cast<size_t>(base + i)], sf)) {
            cands.push_back(i);
        }
    }
    for (int sb = 0; sb < n_sb_; ++sb) {
        tx_[static_cast<size_t>(cell * n_sb_ + sb)] = CellSbTx{};
    }
    if (cands.empty()) {
        return;
    }

    // per-UE rank and per-subband single-user rate estimates
    std::vector<int> rank(static_cast<size_t>(k), 1);
    Eigen::MatrixXd single_rate(k, n_sb_);
    single_rate.setZero();
    for (int i : cands) {
        const int ue = base + i;
        if (cfg_.engine.ideal_feedback) {
            // rank 2 when the second singular direction is meaningful
            const UeState& u = ues_[static_cast<size_t>(ue)];
            int r2 = 0;
            for (int sb = 0; sb < n_sb_; ++sb) {
                const Eigen::Vector2d& s2 = u.ideal_sig2[static_cast<size_t>(sb)];
                if (cfg_.engine.rx_antennas == 2 && cfg_.engine.max_rank_per_ue == 2 &&
                    s2(1) > 0.1 * s2(0)) {
                    ++r2;
                }
            }
            rank[static_cast<size_t>(i)] = (2 * r2 > n_sb_) ? 2 : 1;
        } else {
            rank[static_cast<size_t>(i)] = report_rank(ues_[static_cast<size_t>(ue)]);
        }
        for (int sb = 0; sb < n_sb_; ++sb) {
            single_rate(i, sb) =
                estimate_rate_bits(ue, sb, rank[static_cast<size_t>(i)], 1.0);
        }
    }

    // candidate groups: singles plus greedy pairs anchored at the PF leaders
    std::vector<MuGroup> groups;
    for (int i : cands) {
        MuGroup g;
        g.ue_ids = {i};
        g.ranks = {rank[static_cast<size_t>(i)]};
        groups.push_back(g);
    }
    std::vector<int> order = cands;
    SchedulingState& pf = pf_[static_cast<size_t>(cell)];
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double ma = single_rate.row(a).sum() / pf.average(a);
        const double mb = single_rate.row(b).sum() / pf.average(b);
        return ma != mb ? ma > mb : a < b;
    });
    const int n_anchors = std::min<int>(2, static_cast<int>(order.size()));
    for (int ai = 0; ai < n_anchors; ++ai) {
        const int a = order[static_cast<size_t>(ai)];
        for (int v : order) {
            if (v == a) {
                continue;
            }
            if (rank[static_cast<size_t>(a)] + rank[static_cast<size_t>(v)] >
                cfg_.engine.max_layers) {
                continue;
            }
            const double corr = direction_correlation(base + a, base + v, 0);
            if (corr > cfg_.engine.pairing_corr_threshold) {
                continue;
            }
            if (a < v || std::find_if(groups.begin(), groups.end(), [&](const MuGroup& g) {
                             return g.ue_ids.size() == 2 && g.ue_ids[0] == v &&
                                    g.ue_ids[1] == a;
                         }) == groups.end()) {
                MuGroup g;
                g.ue_ids = {a, v};
                g.ranks = {rank[static_cast<size_t>(a)], rank[static_cast<size_t>(v)]};
                groups.push_back(g);
            }
        }
    }

    Eigen::MatrixXd group_rates(static_cast<Eigen::Index>(groups.size()), n_sb_);
    std::vector<Eigen::MatrixXd> ue_rates(groups.size());
    for (size_t g = 0; g < groups.size(); ++g) {
        const MuGroup& grp = groups[g];
        const int total_layers = grp.total_layers();
        ue_rates[g].resize(static_cast<Eigen::Index>(grp.ue_ids.size()), n_sb_);
        for (int sb = 0; sb < n_sb_; ++sb) {
            double sum = 0.0;
            for (size_t m = 0; m < grp.ue_ids.size(); ++m) {
                const int i = grp.ue_ids[m];
                const double share =
                    static_cast<double>(grp.ranks[m]) / total_layers;
                const double r = (grp.ue_ids.size() == 1)
                                     ? single_rate(i, sb)
                                     : estimate_rate_bits(base + i, sb, grp.ranks[m], share);
                ue_rates[g](static_cast<Eigen::Index>(m), sb) = r;
                sum += r;
            }
            group_rates(static_cast<Eigen::Index>(g), sb) = sum;
        }
    }

    const std::vector<int> chosen = pf_schedule(pf, groups, group_rates, ue_rates);

    for (int sb = 0; sb < n_sb_; ++sb) {
        const MuGroup& grp = groups[static_cast<size_t>(chosen[static_cast<size_t>(sb)])];
        if (group_rates(chosen[static_cast<size_t>(sb)], sb) <= 0.0) {
            continue;
        }
        CellSbTx& out = tx_[static_cast<size_t>(cell * n_sb_ + sb)];

        // stack quantized layer rows; dynamic beams get a per-subband basis
        std::vector<Eigen::MatrixXcd> member_rows(grp.ue_ids.size());
        std::vector<int> member_keys;
        int total_layers = 0;
        for (size_t m = 0; m < grp.ue_ids.size(); ++m) {
            make_layer_rows(base + grp.ue_ids[m], sb, grp.ranks[m], member_rows[m],
                            dynamic_beams_ ? &member_keys : nullptr);
            total_layers += grp.ranks[m];
        }

        int dim = ports_;
        Eigen::MatrixXcd gram;
        if (dynamic_beams_) {
            std::vector<int> keys = member_keys;
            std::sort(keys.begin(), keys.end());
            keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
            out.basis_keys = keys;
            dim = 2 * static_cast<int>(keys.size());
            gram = Eigen::MatrixXcd::Zero(dim, dim);
            const int m_rows = cfg_.array.m_vertical;
            const int n_cols = cfg_.array.n_horizontal;
            for (size_t a = 0; a < keys.size(); ++a) {
                for (size_t b = 0; b < keys.size(); ++b) {
                    const double pa = std::sin(beam_key_el(keys[a]) * kDegToRad);
                    const double pb = std::sin(beam_key_el(keys[b]) * kDegToRad);
                    const double delta = 2.0 * M_PI * cfg_.array.dv_lambda * (pb - pa);
                    const cplx ip = geometric_phase_sum(-delta, m_rows) *
                                    static_cast<double>(n_cols);
                    for (int pol = 0; pol < 2; ++pol) {
                        gram(2 * static_cast<Eigen::Index>(a) + pol,
                             2 * static_cast<Eigen::Index>(b) + pol) = ip;
                    }
                }
            }
        } else {
            gram = static_gram_;
        }

        Eigen::MatrixXcd rows(total_layers, dim);
        std::vector<int> owner(static_cast<size_t>(total_layers));
        {
            int l = 0;
            size_t key_pos = 0;
            for (size_t m = 0; m < grp.ue_ids.size(); ++m) {
                if (dynamic_beams_) {
                    const int key = member_keys[key_pos++];
                    const auto it =
                        std::find(out.basis_keys.begin(), out.basis_keys.end(), key);
                    const int col = 2 * static_cast<int>(it - out.basis_keys.begin());
                    for (int r = 0; r < member_rows[m].rows(); ++r, ++l) {
                        rows.row(l).setZero();
                        rows(l, col) = member_rows[m](r, 0);
                        rows(l, col + 1) = member_rows[m](r, 1);
                        owner[static_cast<size_t>(l)] = grp.ue_ids[m];
                    }
                } else {
                    for (int r = 0; r < member_rows[m].rows(); ++r, ++l) {
                        rows.row(l) = member_rows[m].row(r);
                        owner[static_cast<size_t>(l)] = grp.ue_ids[m];
                    }
                }
            }
        }

        // SLNR solve: w_l along (lambda*G + sum_j r_j^H r_j)^-1 r_l^H
        double lambda;
        if (cfg_.engine.ideal_feedback) {
            lambda = noise_w_;
        } else {
            double min_sinr = 1e30;
            for (size_t m = 0; m < grp.ue_ids.size(); ++m) {
                const UeState& u = ues_[static_cast<size_t>(base + grp.ue_ids[m])];
                const SubbandCsi& csi = u.active.sb[static_cast<size_t>(sb)];
                min_sinr = std::min(min_sinr, efficiency_to_sinr(std::max(csi.eff1, 0.01)));
            }
            const double mean_row2 = rows.rowwise().squaredNorm().mean();
            lambda = total_layers * mean_row2 /
                     (std::max(min_sinr, 0.1) * static_gram_mean_diag_);
        }

        Eigen::MatrixXcd mat = lambda * gram;
        mat += rows.adjoint() * rows;
        const Eigen::LDLT<Eigen::MatrixXcd> ldlt(mat);

        out.active = true;
        const double p_layer = tx_power_w_ / total_layers;
        for (int l = 0; l < total_layers; ++l) {
            Eigen::VectorXcd w = ldlt.solve(rows.row(l).adjoint());
            const double pw = std::real((w.adjoint() * gram * w)(0, 0));
            if (pw <= 0.0) {
                continue;
            }
            w *= std::sqrt(p_layer / pw);
            TxLayer layer;
            layer.ue = base + owner[static_cast<size_t>(l)];
            layer.coef = w;
            out.layers.push_back(std::move(layer));
        }
        ++scheduled_units_;

        if (trace_sched_) {
            std::string ids;
            std::string ranks;
            for (size_t m = 0; m < grp.ue_ids.size(); ++m) {
                if (m > 0) {
                    ids += "|";
                    ranks += "|";
                }
                ids += std::to_string(base + grp.ue_ids[m]);
                ranks += std::to_string(grp.ranks[m]);
            }
            trace_sched_->row({std::to_string(sf), std::to_string(cell), std::to_string(sb),
                               ids, ranks,
                               format_double(group_rates(
                                   chosen[static_cast<size_t>(sb)], sb))});
        }
    }
}

Eigen::Vector2cd DropSimulator::eval_layer(int ue, int cell, int sb, const CellSbTx& tx,
                                           const TxLayer& layer) {
    if (!dynamic_beams_) {
        const Eigen::MatrixXcd& hp = h_ports_[static_cast<size_t>(link_idx(ue, cell, sb))];
        return hp * layer.coef;
    }
    Eigen::Vector2cd v = Eigen::Vector2cd::Zero();
    for (size_t b = 0; b < tx.basis_keys.size(); ++b) {
        const Eigen::Matrix2cd& resp = beam_response(ue, cell, sb, tx.basis_keys[b]);
        v += layer.coef(2 * static_cast<Eigen::Index>(b)) * resp.col(0) +
             layer.coef(2 * static_cast<Eigen::Index>(b) + 1) * resp.col(1);
    }
    return v;
}

void DropSimulator::evaluate_subframe(int sf) {
    const double cap = CqiTable::lte().cap;
    for (int ue = 0; ue < n_ue_; ++ue) {
        UeState& u = ues_[static_cast<size_t>(ue)];
        const int c0 = serving_cell(ue);

        double attempt_mi = 0.0;
        double scheduled_bits = 0.0;
        bool any = false;

        for (int sb = 0; sb < n_sb_; ++sb) {
            const CellSbTx& own = tx_[static_cast<size_t>(c0 * n_sb_ + sb)];
            if (!own.active) {
                continue;
            }
            std::vector<int> own_layers;
            for (size_t l = 0; l < own.layers.size(); ++l) {
                if (own.layers[l].ue == ue) {
                    own_layers.push_back(static_cast<int>(l));
                }
            }
            if (own_layers.empty()) {
                continue;
            }
            any = true;

            Eigen::Matrix2cd r_tot = noise_w_ * Eigen::Matrix2cd::Identity();
            double serving_power = 0.0;
            double interf_power = 0.0;
            std::vector<Eigen::Vector2cd> own_v(own.layers.size());
            for (size_t l = 0; l < own.layers.size(); ++l) {
                own_v[l] = eval_layer(ue, c0, sb, own, own.layers[l]);
                r_tot += own_v[l] * own_v[l].adjoint();
                serving_power += own_v[l].squaredNorm();
            }
            if (!cfg_.debug.disable_interference) {
                for (int c = 0; c < n_cells_; ++c) {
                    if (c == c0) {
                        continue;
                    }
                    const CellSbTx& other = tx_[static_cast<size_t>(c * n_sb_ + sb)];
                    if (!other.active) {
                        continue;
                    }
                    for (const TxLayer& layer : other.layers) {
                        const Eigen::Vector2cd v = eval_layer(ue, c, sb, other, layer);
                        r_tot += v * v.adjoint();
                        interf_power += v.squaredNorm();
                    }
                }
            }
            if (cfg_.debug.check_energy) {
                const double total = r_tot.trace().real();
                const double parts = serving_power + interf_power + 2.0 * noise_w_;
                const double err = std::abs(total - parts) / std::max(parts, 1e-300);
                energy_err_max_ = std::max(energy_err_max_, err);
            }

            const Eigen::Matrix2cd r_inv = hermitian_inverse_2x2(r_tot);
            double mi_sb = 0.0;
            for (int l : own_layers) {
                const Eigen::Vector2cd& v = own_v[static_cast<size_t>(l)];
                const double q = std::real((v.adjoint() * r_inv * v)(0, 0));
                double sinr = q / std::max(1e-12, 1.0 - q);
                if (!cfg_.engine.ideal_channel_estimation) {
                    const double eps =
                        1.0 / (1.0 + cfg_.engine.dmrs_re_per_rb * std::max(sinr, 1e-9));
                    sinr = sinr * (1.0 - eps) / (1.0 + sinr * eps);
                }
                mi_sb += std::min(std::log2(1.0 + sinr), cap);
            }
            attempt_mi += mi_sb * data_re(sb);

            // scheduled transport bits for this allocation
            const int rank_u = static_cast<int>(own_layers.size());
            int total_layers = 0;
            for (const TxLayer& layer : own.layers) {
                (void)layer;
                ++total_layers;
            }
            const double share = static_cast<double>(rank_u) / total_layers;
            scheduled_bits += estimate_rate_bits(ue, sb, rank_u, share);
        }

        if (!any) {
            continue;
        }

        // HARQ: retransmit the oldest due process, otherwise start a new TB
        int tb_idx = -1;
        for (size_t i = 0; i < u.tbs.size(); ++i) {
            if (u.tbs[i].due_sf <= sf &&
                (tb_idx < 0 || u.tbs[i].due_sf < u.tbs[static_cast<size_t>(tb_idx)].due_sf)) {
                tb_idx = static_cast<int>(i);
            }
        }
        if (tb_idx < 0) {
            if (scheduled_bits <= 0.0 || u.tbs.size() >= 8) {
                continue;
            }
            TbState tb;
            tb.required_bits = scheduled_bits;
            tb.payload_bits = scheduled_bits;
            if (cfg_.traffic.model == TrafficConfig::Model::Ftp) {
                tb.payload_bits = std::min(scheduled_bits, u.backlog_bits);
                if (tb.payload_bits <= 0.0) {
                    continue;
                }
                u.backlog_bits -= tb.payload_bits;
            }
            u.tbs.push_back(tb);
            tb_idx = static_cast<int>(u.tbs.size()) - 1;
        }

        TbState& tb = u.tbs[static_cast<size_t>(tb_idx)];
        tb.acc_mi_bits += attempt_mi;
        tb.attempts += 1;

        if (tb.acc_mi_bits >= tb.required_bits) {
            u.delivered_bits += tb.payload_bits;
            if (cfg_.traffic.model == TrafficConfig::Model::Ftp) {
                double remaining = tb.payload_bits;
                while (remaining > 0.0 && !u.packets.empty()) {
                    FtpPacket& pkt = u.packets.front();
                    const double used = std::min(remaining, pkt.bits_left);
                    pkt.bits_left -= used;
                    remaining -= used;
                    if (pkt.bits_left <= 1e-9) {
                        const double secs = (sf - pkt.arrival_sf + 1) * 1e-3;
                        packet_tputs_.push_back(pkt.bits_total / secs / 1e6);
                        ++packets_done_;
                        u.packets.pop_front();
                    }
                }
            }
            u.tbs.erase(u.tbs.begin() + tb_idx);
        } else if (tb.attempts > cfg_.engine.harq.max_retx) {
            // residual errors are left to the upper layers: payload returns
            // to the queue under FTP, full-buffer bits are simply lost
            if (cfg_.traffic.model == TrafficConfig::Model::Ftp) {
                u.backlog_bits += tb.payload_bits;
            }
            u.tbs.erase(u.tbs.begin() + tb_idx);
        } else {
            tb.due_sf = sf + cfg_.engine.harq.retx_delay_ms;
        }
    }
    total_units_ += static_cast<long>(n_cells_) * n_sb_;
}

void DropSimulator::finalize_metrics(SimMetrics& out) {
    const double horizon_s = cfg_.engine.subframes * 1e-3;
    const double denom = horizon_s * cfg_.engine.bandwidth_hz;

    out.ue_se.resize(static_cast<size_t>(n_ue_));
    std::vector<double> cell_se(static_cast<size_t>(n_cells_), 0.0);
    for (int u = 0; u < n_ue_; ++u) {
        out.ue_se[static_cast<size_t>(u)] = ues_[static_cast<size_t>(u)].delivered_bits / denom;
        cell_se[static_cast<size_t>(serving_cell(u))] +=
            out.ue_se[static_cast<size_t>(u)];
    }
    out.cell_avg_se = mean(cell_se);
    out.mean_ue_se = mean(out.ue_se);
    out.edge_ue_se = percentile(out.ue_se, 0.05);

    out.packet_tput_mbps = packet_tputs_;
    out.mean_packet_tput_mbps = mean(packet_tputs_);
    out.edge_packet_tput_mbps = percentile(packet_tputs_, 0.05);
    out.packets_completed = packets_done_;
    long unfinished = 0;
    for (const auto& u : ues_) {
        unfinished += static_cast<long>(u.packets.size());
    }
    out.packets_unfinished = unfinished;

    out.resource_utilization =
        total_units_ > 0 ? static_cast<double>(scheduled_units_) / total_units_ : 0.0;
    out.mean_feedback_bits_per_report =
        fb_reports_ > 0 ? fb_bits_sum_ / fb_reports_ : 0.0;
    out.energy_ledger_max_rel_err = energy_err_max_;
}

SimMetrics DropSimulator::run() {
    build_network();
    build_codebooks();
    drop_ues();
    build_channels();
    build_traffic();

    for (int sf = 0; sf < cfg_.engine.subframes; ++sf) {
        process_arrivals(sf);
        apply_pending(sf);
        if (!cfg_.engine.ideal_feedback) {
            if (dynamic_beams_ && sf % cfg_.feedback.long_term_period_ms == 0) {
                for (int u = 0; u < n_ue_; ++u) {
                    measure_long_term(u, sf);
                }
            }
            if (sf % cfg_.feedback.report_period_ms == 0) {
                measure_all(sf);
            }
        }
        for (int c = 0; c < n_cells_; ++c) {
            schedule_cell(c, sf);
        }
        evaluate_subframe(sf);
    }

    SimMetrics metrics;
    finalize_metrics(metrics);
    return metrics;
}

} // namespace

OverheadLedger OverheadLedger::make(const EngineConfig& engine, int csirs_resources,
                                    int csirs_period_ms, double amortized_extra_re) {
    OverheadLedger l;
    l.control = engine.control_symbols * 12.0 / kRePerRbSubframe;
    l.crs = static_cast<double>(engine.crs_re_per_rb) / kRePerRbSubframe;
    l.dmrs = static_cast<double>(engine.dmrs_re_per_rb) / kRePerRbSubframe;
    l.csirs = (csirs_resources + amortized_extra_re) /
              (static_cast<double>(csirs_period_ms) * kRePerRbSubframe);
    return l;
}

SimMetrics run_drop(const SimConfig& config, uint64_t seed) {
    DropSimulator sim(config, seed);
    return sim.run();
}

} // namespace fdmimo
