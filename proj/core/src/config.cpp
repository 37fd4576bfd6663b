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

#include "fdmimo/config.hpp"

#include <fstream>
#include <set>

namespace fdmimo {

using nlohmann::json;

namespace {

// Strict object reader: every key must be consumed, unknown keys abort.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError("config: " + path_ + " must be an object");
        }
    }

    template <typename T>
    void get(const char* key, T& out) {
        const auto it = j_.find(key);
        if (it == j_.end()) {
            return;
        }
        seen_.insert(key);
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config: bad value type for " + path_ + "." + key);
        }
    }

    bool has(const char* key) {
        return j_.find(key) != j_.end();
    }

    const json* child(const char* key) {
        const auto it = j_.find(key);
        if (it == j_.end()) {
            return nullptr;
        }
        seen_.insert(key);
        return &*it;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (seen_.find(it.key()) == seen_.end()) {
                throw ConfigError("config: unknown key " + path_ + "." + it.key());
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void parse_scenario(const json& j, Scenario& s, const std::string& path) {
    Reader r(j, path);
    std::string kind;
    r.get("kind", kind);
    if (!kind.empty()) {
        if (kind == "uma3d") {
            s = Scenario::uma3d();
        } else if (kind == "umi3d") {
            s = Scenario::umi3d();
        } else {
            throw ConfigError("config: scenario.kind must be uma3d or umi3d");
        }
    }
    r.get("isd_m", s.isd_m);
    r.get("bs_height_m", s.bs_height_m);
    r.get("height_gain_db_per_m", s.height_gain_db_per_m);
    r.get("min_bs_ue_distance_m", s.min_bs_ue_distance_m);
    r.get("shadow_sigma_los_db", s.shadow_sigma_los_db);
    r.get("shadow_sigma_nlos_db", s.shadow_sigma_nlos_db);
    r.get("asd_deg", s.asd_deg);
    r.get("xpr_db", s.xpr_db);
    r.get("ricean_k_db", s.ricean_k_db);
    r.get("n_clusters", s.n_clusters);
    r.get("indoor_fraction", s.indoor_fraction);
    r.get("o2i_loss_db", s.o2i_loss_db);
    r.get("max_floor", s.max_floor);
    if (const json* c = r.child("los")) {
        Reader rl(*c, path + ".los");
        rl.get("near_m", s.los.near_m);
        rl.get("decay_m", s.los.decay_m);
        rl.get("height_scale_m", s.los.height_scale_m);
        rl.finish();
    }
    if (const json* c = r.child("pathloss")) {
        Reader rp(*c, path + ".pathloss");
        rp.get("los_const_db", s.pathloss.los_const_db);
        rp.get("los_exp_db", s.pathloss.los_exp_db);
        rp.get("nlos_const_db", s.pathloss.nlos_const_db);
        rp.get("nlos_exp_db", s.pathloss.nlos_exp_db);
        rp.finish();
    }
    if (const json* c = r.child("esd")) {
        Reader re(*c, path + ".esd");
        re.get("anchor_deg", s.esd.anchor_deg);
        re.get("anchor_distance_m", s.esd.anchor_distance_m);
        re.get("distance_exponent", s.esd.distance_exponent);
        re.get("height_scale_m", s.esd.height_scale_m);
        re.get("min_deg", s.esd.min_deg);
        re.get("max_deg", s.esd.max_deg);
        re.finish();
    }
    r.finish();
}

void parse_array(const json& j, ArrayConfig& a, const std::string& path) {
    Reader r(j, path);
    r.get("M", a.m_vertical);
    r.get("N", a.n_horizontal);
    r.get("P", a.polarization);
    r.get("dv_lambda", a.dv_lambda);
    r.get("dh_lambda", a.dh_lambda);
    r.get("carrier_hz", a.carrier_hz);
    r.finish();
}

void parse_txru(const json& j, TxruConfig& t, const std::string& path) {
    Reader r(j, path);
    std::string kind;
    r.get("kind", kind);
    if (!kind.empty()) {
        if (kind == "partitioned") {
            t.kind = TxruKind::Partitioned;
        } else if (kind == "connected") {
            t.kind = TxruKind::Connected;
        } else {
            throw ConfigError("config: txru.kind must be partitioned or connected");
        }
    }
    r.get("L", t.l_txru);
    r.get("L_prime", t.l_prime);
    r.get("downtilt_deg", t.downtilt_deg);
    if (const json* c = r.child("grid")) {
        Reader rg(*c, path + ".grid");
        rg.get("NV", t.grid.n_v);
        rg.get("NH", t.grid.n_h);
        rg.finish();
    }
    r.finish();
}

void parse_element_pattern(const json& j, ElementPattern& p, const std::string& path) {
    Reader r(j, path);
    std::string kind;
    r.get("kind", kind);
    if (!kind.empty()) {
        if (kind == "isotropic") {
            p.kind = ElementPattern::Kind::Isotropic;
        } else if (kind == "sector3gpp") {
            p.kind = ElementPattern::Kind::Sector3gpp;
        } else {
            throw ConfigError("config: element_pattern.kind must be isotropic or sector3gpp");
        }
    }
    r.get("max_gain_dbi", p.max_gain_dbi);
    r.get("az_3db_deg", p.az_3db_deg);
    r.get("el_3db_deg", p.el_3db_deg);
    r.get("front_back_db", p.front_back_db);
    r.get("sla_db", p.sla_db);
    r.get("boresight_tilt_deg", p.boresight_tilt_deg);
    r.finish();
}

void parse_feedback(const json& j, FeedbackConfig& f, const std::string& path) {
    Reader r(j, path);
    std::string cls;
    r.get("feedback_class", cls);
    if (!cls.empty()) {
        if (cls == "A") {
            f.cls = FeedbackClass::A;
        } else if (cls == "B") {
            f.cls = FeedbackClass::B;
        } else if (cls == "B2") {
            f.cls = FeedbackClass::B2;
        } else {
            throw ConfigError("config: feedback_class must be A, B or B2");
        }
    }
    r.get("N_B", f.n_b);
    r.get("report_period_ms", f.report_period_ms);
    r.get("delay_ms", f.delay_ms);
    r.get("v_oversampling", f.v_oversampling);
    r.get("h_oversampling", f.h_oversampling);
    r.get("cophase_bits", f.cophase_bits);
    r.get("long_term_period_ms", f.long_term_period_ms);
    if (const json* c = r.child("beam_grid")) {
        Reader rb(*c, path + ".beam_grid");
        rb.get("el_min_deg", f.beam_grid.el_min_deg);
        rb.get("el_max_deg", f.beam_grid.el_max_deg);
        rb.get("adaptive_span_deg", f.beam_grid.adaptive_span_deg);
        rb.finish();
    }
    f.beam_grid.n_beams = f.n_b;
    r.finish();
}

void parse_traffic(const json& j, TrafficConfig& t, const std::string& path) {
    Reader r(j, path);
    std::string model;
    r.get("model", model);
    if (!model.empty()) {
        if (model == "full_buffer") {
            t.model = TrafficConfig::Model::FullBuffer;
        } else if (model == "ftp") {
            t.model = TrafficConfig::Model::Ftp;
        } else {
            throw ConfigError("config: traffic.model must be full_buffer or ftp");
        }
    }
    r.get("packet_bytes", t.packet_bytes);
    r.get("arrival_rate_hz", t.arrival_rate_hz);
    r.finish();
}

void parse_engine(const json& j, EngineConfig& e, const std::string& path) {
    Reader r(j, path);
    r.get("subframes", e.subframes);
    r.get("subbands", e.subbands);
    r.get("rb_total", e.rb_total);
    r.get("bandwidth_hz", e.bandwidth_hz);
    r.get("ue_per_cell", e.ue_per_cell);
    r.get("rx_antennas", e.rx_antennas);
    r.get("tx_power_dbm", e.tx_power_dbm);
    r.get("noise_figure_db", e.noise_figure_db);
    r.get("wraparound", e.wraparound);
    r.get("ideal_feedback", e.ideal_feedback);
    r.get("ideal_channel_estimation", e.ideal_channel_estimation);
    r.get("quantize_cqi", e.quantize_cqi);
    r.get("mcs_backoff", e.mcs_backoff);
    r.get("pf_window", e.pf_window);
    r.get("max_layers", e.max_layers);
    r.get("max_rank_per_ue", e.max_rank_per_ue);
    r.get("pairing_corr_threshold", e.pairing_corr_threshold);
    r.get("redraw_channel_per_period", e.redraw_channel_per_period);
    r.get("control_symbols", e.control_symbols);
    r.get("dmrs_re_per_rb", e.dmrs_re_per_rb);
    r.get("crs_re_per_rb", e.crs_re_per_rb);
    if (const json* c = r.child("harq")) {
        Reader rh(*c, path + ".harq");
        rh.get("max_retx", e.harq.max_retx);
        rh.get("retx_delay_ms", e.harq.retx_delay_ms);
        rh.finish();
    }
    r.finish();
}

void parse_debug(const json& j, DebugConfig& d, const std::string& path) {
    Reader r(j, path);
    r.get("single_cell", d.single_cell);
    r.get("disable_interference", d.disable_interference);
    r.get("fixed_ue", d.fixed_ue);
    r.get("ue_x_m", d.ue_x_m);
    r.get("ue_y_m", d.ue_y_m);
    r.get("ue_height_m", d.ue_height_m);
    r.get("force_los", d.force_los);
    r.get("check_energy", d.check_energy);
    r.finish();
}

void parse_trace(const json& j, TraceConfig& t, const std::string& path) {
    Reader r(j, path);
    r.get("feedback", t.feedback);
    r.get("scheduler", t.scheduler);
    r.get("channel", t.channel);
    r.get("dir", t.dir);
    r.finish();
}

} // namespace

SimConfig SimConfig::defaults() {
    SimConfig c;
    c.element_pattern.kind = ElementPattern::Kind::Sector3gpp;
    return c;
}

SimConfig SimConfig::from_json(const json& j) {
    SimConfig c = defaults();
    Reader r(j, "$");
    if (const json* s = r.child("scenario")) parse_scenario(*s, c.scenario, "scenario");
    if (const json* s = r.child("array")) parse_array(*s, c.array, "array");
    if (const json* s = r.child("txru")) parse_txru(*s, c.txru, "txru");
    if (const json* s = r.child("element_pattern"))
        parse_element_pattern(*s, c.element_pattern, "element_pattern");
    if (const json* s = r.child("feedback")) parse_feedback(*s, c.feedback, "feedback");
    if (const json* s = r.child("traffic")) parse_traffic(*s, c.traffic, "traffic");
    if (const json* s = r.child("engine")) parse_engine(*s, c.engine, "engine");
    if (const json* s = r.child("debug")) parse_debug(*s, c.debug, "debug");
    if (const json* s = r.child("trace")) parse_trace(*s, c.trace, "trace");
    r.finish();
    c.scenario.carrier_hz = c.array.carrier_hz;
    c.validate();
    return c;
}

SimConfig SimConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config: JSON parse error in " + path + ": " + e.what());
    }
    return from_json(j);
}

json SimConfig::to_json() const {
    json j;
    j["scenario"] = {
        {"kind", scenario.kind == ScenarioKind::UMa3D ? "uma3d" : "umi3d"},
        {"isd_m", scenario.isd_m},
        {"bs_height_m", scenario.bs_height_m},
        {"height_gain_db_per_m", scenario.height_gain_db_per_m},
        {"min_bs_ue_distance_m", scenario.min_bs_ue_distance_m},
        {"shadow_sigma_los_db", scenario.shadow_sigma_los_db},
        {"shadow_sigma_nlos_db", scenario.shadow_sigma_nlos_db},
        {"asd_deg", scenario.asd_deg},
        {"xpr_db", scenario.xpr_db},
        {"ricean_k_db", scenario.ricean_k_db},
        {"n_clusters", scenario.n_clusters},
        {"indoor_fraction", scenario.indoor_fraction},
        {"o2i_loss_db", scenario.o2i_loss_db},
        {"max_floor", scenario.max_floor},
        {"los",
         {{"near_m", scenario.los.near_m},
          {"decay_m", scenario.los.decay_m},
          {"height_scale_m", scenario.los.height_scale_m}}},
        {"pathloss",
         {{"los_const_db", scenario.pathloss.los_const_db},
          {"los_exp_db", scenario.pathloss.los_exp_db},
          {"nlos_const_db", scenario.pathloss.nlos_const_db},
          {"nlos_exp_db", scenario.pathloss.nlos_exp_db}}},
        {"esd",
         {{"anchor_deg", scenario.esd.anchor_deg},
          {"anchor_distance_m", scenario.esd.anchor_distance_m},
          {"distance_exponent", scenario.esd.distance_exponent},
          {"height_scale_m", scenario.esd.height_scale_m},
          {"min_deg", scenario.esd.min_deg},
          {"max_deg", scenario.esd.max_deg}}},
    };
    j["array"] = {{"M", array.m_vertical},   {"N", array.n_horizontal},
                  {"P", array.polarization}, {"dv_lambda", array.dv_lambda},
                  {"dh_lambda", array.dh_lambda}, {"carrier_hz", array.carrier_hz}};
    j["txru"] = {{"kind", txru.kind == TxruKind::Partitioned ? "partitioned" : "connected"},
                 {"L", txru.l_txru},
                 {"L_prime", txru.l_prime},
                 {"downtilt_deg", txru.downtilt_deg},
                 {"grid", {{"NV", txru.grid.n_v}, {"NH", txru.grid.n_h}}}};
    j["element_pattern"] = {
        {"kind", element_pattern.kind == ElementPattern::Kind::Isotropic ? "isotropic"
                                                                          : "sector3gpp"},
        {"max_gain_dbi", element_pattern.max_gain_dbi},
        {"az_3db_deg", element_pattern.az_3db_deg},
        {"el_3db_deg", element_pattern.el_3db_deg},
        {"front_back_db", element_pattern.front_back_db},
        {"sla_db", element_pattern.sla_db},
        {"boresight_tilt_deg", element_pattern.boresight_tilt_deg}};
    const char* cls = feedback.cls == FeedbackClass::A ? "A"
                      : feedback.cls == FeedbackClass::B ? "B" : "B2";
    j["feedback"] = {{"feedback_class", cls},
                     {"N_B", feedback.n_b},
                     {"report_period_ms", feedback.report_period_ms},
                     {"delay_ms", feedback.delay_ms},
                     {"v_oversampling", feedback.v_oversampling},
                     {"h_oversampling", feedback.h_oversampling},
                     {"cophase_bits", feedback.cophase_bits},
                     {"long_term_period_ms", feedback.long_term_period_ms},
                     {"beam_grid",
                      {{"el_min_deg", feedback.beam_grid.el_min_deg},
                       {"el_max_deg", feedback.beam_grid.el_max_deg},
                       {"adaptive_span_deg", feedback.beam_grid.adaptive_span_deg}}}};
    j["traffic"] = {
        {"model", traffic.model == TrafficConfig::Model::FullBuffer ? "full_buffer" : "ftp"},
        {"packet_bytes", traffic.packet_bytes},
        {"arrival_rate_hz", traffic.arrival_rate_hz}};
    j["engine"] = {{"subframes", engine.subframes},
                   {"subbands", engine.subbands},
                   {"rb_total", engine.rb_total},
                   {"bandwidth_hz", engine.bandwidth_hz},
                   {"ue_per_cell", engine.ue_per_cell},
                   {"rx_antennas", engine.rx_antennas},
                   {"tx_power_dbm", engine.tx_power_dbm},
                   {"noise_figure_db", engine.noise_figure_db},
                   {"wraparound", engine.wraparound},
                   {"ideal_feedback", engine.ideal_feedback},
                   {"ideal_channel_estimation", engine.ideal_channel_estimation},
                   {"quantize_cqi", engine.quantize_cqi},
                   {"mcs_backoff", engine.mcs_backoff},
                   {"pf_window", engine.pf_window},
                   {"max_layers", engine.max_layers},
                   {"max_rank_per_ue", engine.max_rank_per_ue},
                   {"pairing_corr_threshold", engine.pairing_corr_threshold},
                   {"redraw_channel_per_period", engine.redraw_channel_per_period},
                   {"control_symbols", engine.control_symbols},
                   {"dmrs_re_per_rb", engine.dmrs_re_per_rb},
                   {"crs_re_per_rb", engine.crs_re_per_rb},
                   {"harq",
                    {{"max_retx", engine.harq.max_retx},
                     {"retx_delay_ms", engine.harq.retx_delay_ms}}}};
    j["debug"] = {{"single_cell", debug.single_cell},
                  {"disable_interference", debug.disable_interference},
                  {"fixed_ue", debug.fixed_ue},
                  {"ue_x_m", debug.ue_x_m},
                  {"ue_y_m", debug.ue_y_m},
                  {"ue_height_m", debug.ue_height_m},
                  {"force_los", debug.force_los},
                  {"check_energy", debug.check_energy}};
    j["trace"] = {{"feedback", trace.feedback},
                  {"scheduler", trace.scheduler},
                  {"channel", trace.channel},
                  {"dir", trace.dir}};
    return j;
}

uint64_t fnv1a64(const std::string& data) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

uint64_t SimConfig::hash() const {
    return fnv1a64(to_json().dump());
}

void SimConfig::validate() const {
    array.validate();
    if (scenario.isd_m <= 0.0 || scenario.bs_height_m <= 0.0) {
        throw ConfigError("config: scenario geometry must be positive");
    }
    if (scenario.n_clusters < 1) {
        throw ConfigError("config: n_clusters must be >= 1");
    }
    if (scenario.indoor_fraction < 0.0 || scenario.indoor_fraction > 1.0) {
        throw ConfigError("config: indoor_fraction must lie in [0,1]");
    }
    if (txru.l_txru < 1) {
        throw ConfigError("config: txru.L must be >= 1");
    }
    if (txru.kind == TxruKind::Partitioned &&
        txru.grid.n_v * txru.grid.n_h != txru.l_txru) {
        throw ConfigError("config: txru grid NV*NH must equal L");
    }
    if (feedback.n_b < 1) {
        throw ConfigError("config: feedback.N_B must be >= 1 for class B");
    }
    if (feedback.report_period_ms < 1 || feedback.delay_ms < 0) {
        throw ConfigError("config: feedback timing must be positive");
    }
    if (feedback.cophase_bits != 0 && feedback.cophase_bits != 2) {
        throw ConfigError("config: cophase_bits must be 0 or 2");
    }
    if (engine.subframes < 1 || engine.subbands < 1 || engine.rb_total < engine.subbands) {
        throw ConfigError("config: engine sizes are inconsistent");
    }
    if (engine.ue_per_cell < 1) {
        throw ConfigError("config: need at least one UE per cell");
    }
    if (engine.rx_antennas != 1 && engine.rx_antennas != 2) {
        throw ConfigError("config: rx_antennas must be 1 or 2");
    }
    if (engine.max_rank_per_ue < 1 || engine.max_rank_per_ue > 2) {
        throw ConfigError("config: max_rank_per_ue must be 1 or 2");
    }
    if (engine.max_layers < engine.max_rank_per_ue) {
        throw ConfigError("config: max_layers must be >= max_rank_per_ue");
    }
    if (engine.mcs_backoff <= 0.0 || engine.mcs_backoff > 1.0) {
        throw ConfigError("config: mcs_backoff must lie in (0,1]");
    }
    if (traffic.model == TrafficConfig::Model::Ftp &&
        (traffic.packet_bytes <= 0.0 || traffic.arrival_rate_hz <= 0.0)) {
        throw ConfigError("config: FTP traffic needs positive packet size and rate");
    }
    if (engine.harq.max_retx < 0 || engine.harq.retx_delay_ms < 1) {
        throw ConfigError("config: HARQ parameters out of range");
    }
}

} // namespace fdmimo
