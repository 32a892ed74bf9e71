#include "mbms/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mbms/channel.hpp"
#include "mbms/geometry.hpp"
#include "mbms/harq.hpp"
#include "mbms/rng.hpp"
#include "mbms/scheduler.hpp"
#include "mbms/traffic.hpp"

namespace mbms {

namespace {

constexpr std::uint64_t kCellEntity = 1ULL << 40;

struct Block {
  HarqProcess proc;
  std::vector<int> slots;  // receiver slots, parallel to proc.ue_ids
};

struct FrameRx {
  long bits_done = 0;
  bool failed = false;
};

struct Ue {
  long id = -1;
  int cell = -1;
  UePosition pos;
  std::vector<double> shadow_db;  // per site
  std::vector<double> gain;       // per cell, linear
  FastFading fading;
  long spawn_tti = 0;
  long end_tti = 0;
  long first_frame = 0;
  Rng decode_rng;
  Rng feedback_rng;
  Rng uplink_rng;
  Rng mobility_rng;
  CqiReport report;
  double wideband_db = 0.0;
  bool has_wideband = false;
  PlayoutState playout;
  std::deque<FrameRx> rx;
  std::deque<QueuedFrame> queue;  // unicast backlog
  std::vector<Block> blocks;      // unicast HARQ processes
  long sinr_tti = -1;
  std::vector<double> sinr;
  long scheduled_tti = -1;
};

struct CellState {
  std::vector<int> members;
  std::deque<QueuedFrame> queue;
  std::vector<Block> blocks;
  RecoveryController recovery;
  Rng feedback_rng;
  Rng phase_rng;
  std::vector<int> bg_order;
  LoadController load;
  std::uint32_t activity = 0;
};

}  // namespace

struct Simulator::Impl {
  SimulationConfig cfg;
  FeedbackScheme scheme;
  RadioGeometry geom;
  LinkModel link;
  VideoSource source;
  TapProfile profile;
  PlayoutParams playout_params;
  QoeBudget budget;
  std::vector<double> offsets;
  double noise_w = 0.0;
  double p_sub = 0.0;
  double doppler = 0.0;
  int num_subbands = 0;
  int fixed_subbands = 0;
  double ul_target_w = 0.0;
  double ul_pmax_w = 0.0;
  double ul_noise_w = 0.0;
  double ul_threshold_w = 0.0;

  std::vector<Ue> ues;
  std::vector<CellState> cells;
  std::vector<std::uint32_t> activity_prev;
  TdMinCqiGate gate;
  long next_ue_id = 0;
  long next_tb = 0;
  long tti = 0;
  bool measured = false;
  std::vector<double> fade_buf;

  // accumulators
  double video_power = 0.0;
  double user_power = 0.0;
  long user_power_samples = 0;
  long used_subband_ttis = 0;
  std::vector<int> attempts;
  long tx_bits = 0;
  long tx_blocks = 0;
  FeedbackCounters feedback;
  long gate_checks = 0;
  long gated_ttis = 0;
  long violations = 0;
  RunResult result;

  explicit Impl(const SimulationConfig& c)
      : cfg(c),
        scheme(c.effective_scheme()),
        geom(build_layout(c)),
        link(LinkModel::from_config(c)),
        source(c.frame_bits(), c.frame_interval_ttis) {
    validate(cfg);
    num_subbands = cfg.num_subbands;
    offsets = subband_offsets_hz(num_subbands, cfg.subband_bandwidth_hz);
    noise_w = noise_power_w(cfg.subband_bandwidth_hz, cfg.noise_figure_db);
    p_sub = cfg.subband_power_w();
    doppler = doppler_hz(cfg.ue_speed_mps(), cfg.carrier_ghz * 1e9);
    playout_params.offset_ttis = ttis(cfg.playout_offset_s);
    playout_params.stall_wait_ttis = ttis(cfg.stall_wait_s);
    playout_params.interval_ttis = cfg.frame_interval_ttis;
    budget = {cfg.wait_budget_s, cfg.stall_budget_s, cfg.loss_budget};
    ul_target_w = dbm_to_w(cfg.nack_target_rx_dbm);
    ul_pmax_w = dbm_to_w(cfg.ue_max_power_dbm);
    ul_noise_w = ul_target_w / db_to_linear(cfg.nack_detector_snr_db);
    ul_threshold_w = ul_target_w * db_to_linear(cfg.nack_threshold_rel_db);
    fade_buf.resize(num_subbands);

    if (cfg.mode == Mode::PtmFixed) {
      if (cfg.fixed_ptm_mcs < 0 || cfg.fixed_ptm_mcs >= link.num_mcs()) {
        throw ConfigError("fixed_ptm_mcs must be calibrated to 0.." +
                          std::to_string(link.num_mcs() - 1) + " for ptm-fixed");
      }
      fixed_subbands = fixed_ptm_subbands(cfg, link, cfg.fixed_ptm_mcs);
    }

    const int num_cells = geom.num_cells();
    cells.resize(num_cells);
    activity_prev.assign(num_cells, 0u);
    for (int c = 0; c < num_cells; ++c) {
      CellState& cell = cells[c];
      cell.recovery = RecoveryController(link.num_mcs(), cfg.recovery_window, cfg.recovery_k_max,
                                         cfg.recovery_safety_step, link.num_mcs() - 1);
      cell.feedback_rng = Rng(cfg.seed, Stream::FeedbackError, kCellEntity + c);
      cell.phase_rng = Rng(cfg.seed, Stream::Phases, kCellEntity + c);
      Rng bg(cfg.seed, Stream::Background, kCellEntity + c);
      cell.bg_order = background_order(bg, num_subbands);
      cell.load = LoadController(num_subbands, cfg.load_target, cfg.load_window_ttis, cfg.load_gain);
    }
  }

  static long ttis(double seconds) {
    return std::lround(seconds / SimulationConfig::kTtiSeconds);
  }

  bool ptm() const { return cfg.mode != Mode::Ptp; }

  // ---------------------------------------------------------------- UEs

  void refresh_gains(Ue& ue) {
    ue.gain.resize(geom.num_cells());
    for (int c = 0; c < geom.num_cells(); ++c) {
      const Cell& cell = geom.cells[c];
      const double d = wrap_distance(ue.pos.xy, geom.sites[cell.site], geom);
      const double db = antenna_gain_db(c, ue.pos.xy, geom) -
                        path_loss_db(d, cfg.pathloss_const_db, cfg.pathloss_slope_db) +
                        ue.shadow_db[cell.site];
      ue.gain[c] = db_to_linear(db);
    }
  }

  void spawn(int slot) {
    Ue& ue = ues[slot];
    ue = Ue{};
    ue.id = next_ue_id++;
    const auto id = static_cast<std::uint64_t>(ue.id);
    Rng spawn_rng(cfg.seed, Stream::Spawn, id);
    ue.pos = spawn_ue(spawn_rng, geom, cfg.ue_speed_mps());
    Rng shadow_rng(cfg.seed, Stream::Shadowing, id);
    ue.shadow_db = draw_shadowing(shadow_rng, static_cast<int>(geom.sites.size()),
                                  cfg.shadowing_sigma_db, cfg.shadowing_site_correlation);
    refresh_gains(ue);
    ue.cell = static_cast<int>(std::max_element(ue.gain.begin(), ue.gain.end()) - ue.gain.begin());
    Rng fading_rng(cfg.seed, Stream::Fading, id);
    ue.fading = FastFading(fading_rng, profile, doppler, offsets, cfg.fading_sinusoids);
    Rng life_rng(cfg.seed, Stream::Lifetimes, id);
    ue.spawn_tti = tti;
    ue.end_tti = tti + draw_lifetime_ttis(life_rng, cfg.mean_session_s, SimulationConfig::kTtiSeconds);
    ue.first_frame = source.first_frame_from(tti);
    ue.playout = PlayoutState(ue.first_frame, source.creation_tti(ue.first_frame), playout_params);
    ue.decode_rng = Rng(cfg.seed, Stream::Decode, id);
    ue.feedback_rng = Rng(cfg.seed, Stream::FeedbackError, id);
    ue.uplink_rng = Rng(cfg.seed, Stream::Phases, id);
    ue.mobility_rng = Rng(cfg.seed, Stream::Mobility, id);
    ue.sinr.assign(num_subbands, 0.0);
    cells[ue.cell].members.push_back(slot);
  }

  void record_session(const Ue& ue) {
    if (ue.spawn_tti < cfg.warmup_ttis) return;
    if (!session_evaluable(ue.playout, budget, SimulationConfig::kTtiSeconds)) return;
    const SessionVerdict v = evaluate_satisfaction(ue.playout, budget, SimulationConfig::kTtiSeconds);
    SessionRecord s;
    s.ue_id = ue.id;
    s.spawn_tti = ue.spawn_tti;
    s.end_tti = std::min(ue.end_tti, tti);
    s.cell = ue.cell;
    s.wait_s = static_cast<double>(ue.playout.initial_wait_ttis()) * SimulationConfig::kTtiSeconds;
    s.stall_s = static_cast<double>(ue.playout.stall_ttis()) * SimulationConfig::kTtiSeconds;
    s.loss_rate = ue.playout.loss_rate();
    s.frames = ue.playout.generated();
    s.satisfied = v.satisfied;
    s.reason = v.reason;
    result.sessions.push_back(s);
  }

  void depart(int slot, long end) {
    Ue& ue = ues[slot];
    ue.playout.finish(end);
    record_session(ue);
    auto& members = cells[ue.cell].members;
    members.erase(std::find(members.begin(), members.end(), slot));
  }

  const std::vector<double>& sinr(Ue& ue) {
    if (ue.sinr_tti != tti) {
      ue.fading.power_gains_at(tti, SimulationConfig::kTtiSeconds, fade_buf);
      compute_sinr(ue.gain, ue.cell, fade_buf, activity_prev, p_sub, noise_w, ue.sinr);
      ue.sinr_tti = tti;
    }
    return ue.sinr;
  }

  void measure_cqi(Ue& ue) {
    const std::vector<double>& s = sinr(ue);
    ue.report = link.compute_cqi(s, ue.id, tti);
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    ue.wideband_db = linear_to_db(mean) - linear_to_db(cfg.tx_power_w);
    ue.has_wideband = true;
    if (measured && cfg.mode != Mode::PtmFixed && scheme != FeedbackScheme::NackOriented) {
      ++feedback.cqi_reports;
    }
    if (cfg.mode == Mode::PtmAdaptiveMinCqi && !gate.calibrated()) {
      gate.add_sample(wideband_quality(ue.report.cqi));
    }
  }

  bool alive(const Block& b, std::size_t k) const {
    return ues[b.slots[k]].id == b.proc.ue_ids[k];
  }

  // ------------------------------------------------------------ frames

  void deliver(Ue& ue, long frame_id, long bits) {
    const long i = frame_id - ue.first_frame;
    if (i < 0 || i >= static_cast<long>(ue.rx.size())) return;
    FrameRx& f = ue.rx[i];
    f.bits_done += bits;
    if (!f.failed && f.bits_done >= source.frame_bits()) ue.playout.on_arrival(frame_id, tti);
  }

  void fail(Ue& ue, long frame_id) {
    const long i = frame_id - ue.first_frame;
    if (i < 0 || i >= static_cast<long>(ue.rx.size())) return;
    FrameRx& f = ue.rx[i];
    if (f.failed || f.bits_done >= source.frame_bits()) return;
    f.failed = true;
    ue.playout.on_lost(frame_id, tti);
  }

  void generate_frames() {
    if (!source.frame_due(tti)) return;
    const long fid = source.frame_id_at(tti);
    const long bits = source.frame_bits();
    const QueuedFrame frame{fid, tti, bits, bits};
    auto add = [&](Ue& ue) {
      if (fid < ue.first_frame) return;
      ue.playout.add_frame(fid);
      ue.rx.push_back({});
    };
    if (!ptm()) {
      for (Ue& ue : ues) {
        if (fid < ue.first_frame) continue;
        add(ue);
        ue.queue.push_back(frame);
      }
      return;
    }
    for (CellState& cell : cells) {
      if (cell.members.empty() && cfg.mode != Mode::PtmFixed) continue;
      cell.queue.push_back(frame);
      for (int slot : cell.members) add(ues[slot]);
    }
  }

  void drop_stale_frames() {
    if (!ptm()) {
      for (Ue& ue : ues) {
        for (const QueuedFrame& f : drop_stale(ue.queue, tti, cfg.drop_deadline_s)) fail(ue, f.frame_id);
      }
      return;
    }
    for (CellState& cell : cells) {
      for (const QueuedFrame& f : drop_stale(cell.queue, tti, cfg.drop_deadline_s)) {
        for (int slot : cell.members) fail(ues[slot], f.frame_id);
      }
    }
  }

  // --------------------------------------------------------- HARQ

  /// One transmission of `b`; returns true when the process has ended.
  bool transmit(CellState& cell, Block& b) {
    HarqProcess& p = b.proc;
    const McsEntry& mcs = link.table()[p.mcs];
    const std::size_t n = p.ue_ids.size();
    std::vector<double> mi(n, 0.0);
    std::vector<Rng*> rngs(n, nullptr);
    for (std::size_t k = 0; k < n; ++k) {
      if (!alive(b, k)) {
        p.done[k] = 1;
        continue;
      }
      Ue& ue = ues[b.slots[k]];
      rngs[k] = &ue.decode_rng;
      if (p.done[k]) continue;
      const std::vector<double>& s = sinr(ue);
      double acc = 0.0;
      for (int sb : p.subbands) acc += link.normalized_mi(s[sb], mcs);
      mi[k] = acc / static_cast<double>(p.subbands.size());
    }
    const bool first = p.attempts == 0;
    const std::vector<DecodeOutcome> outcome = decode_attempt(p, mi, link, rngs);
    for (std::size_t k = 0; k < n; ++k) {
      if (outcome[k] == DecodeOutcome::Success) deliver(ues[b.slots[k]], p.frame_id, p.bits);
    }

    bool nack = false;
    if (p.blind) {
      nack = p.attempts < p.max_attempts;
    } else {
      nack = collect_feedback(cell, b, outcome, first);
    }

    const GroupDecision d = p.blind ? (nack ? GroupDecision::Retransmit : GroupDecision::Complete)
                                    : group_decision(p.attempts, p.max_attempts, nack);
    if (d == GroupDecision::Retransmit) {
      p.next_eligible_tti = tti + cfg.harq_rtt_ttis;
      return false;
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (!p.done[k] && alive(b, k)) fail(ues[b.slots[k]], p.frame_id);
    }
    if (p.first_tx_tti >= cfg.warmup_ttis) attempts.push_back(p.attempts);
    return true;
  }

  bool collect_feedback(CellState& cell, Block& b, const std::vector<DecodeOutcome>& outcome,
                        bool first) {
    HarqProcess& p = b.proc;
    const std::size_t n = p.ue_ids.size();
    const double perr = cfg.feedback_error_prob;
    bool nack = false;
    FeedbackCounters fc;

    if (scheme == FeedbackScheme::AckNackPeriodicCqi) {
      for (std::size_t k = 0; k < n; ++k) {
        if (!alive(b, k)) continue;
        Ue& ue = ues[b.slots[k]];
        const FeedbackEvent ev = make_feedback(p.done[k] != 0, scheme, perr, ue.feedback_rng, ue.id, tti);
        ++fc.harq_reports;
        if (ev.kind == FeedbackKind::Ack) ++fc.acks;
        if (ev.kind == FeedbackKind::Nack) {
          ++fc.nacks;
          nack = true;
        }
      }
    } else if (scheme == FeedbackScheme::ExclusiveNack) {
      std::vector<double> amplitudes;
      for (std::size_t k = 0; k < n; ++k) {
        if (outcome[k] != DecodeOutcome::Failure || !alive(b, k)) continue;
        Ue& ue = ues[b.slots[k]];
        const double g = ue.gain[ue.cell];
        const double tx = std::min(ul_pmax_w, ul_target_w / g);
        amplitudes.push_back(std::sqrt(tx * g * ue.uplink_rng.exponential(1.0)));
        ++fc.harq_reports;
        ++fc.nacks;
      }
      nack = common_channel_detect(amplitudes, cell.phase_rng, ul_noise_w, ul_threshold_w);
    } else {
      std::vector<CqiReport> attached;
      for (std::size_t k = 0; k < n; ++k) {
        if (outcome[k] != DecodeOutcome::Failure || !alive(b, k)) continue;
        Ue& ue = ues[b.slots[k]];
        const FeedbackEvent ev = make_feedback(false, scheme, perr, ue.feedback_rng, ue.id, tti,
                                               ue.report.valid() ? &ue.report : nullptr);
        ++fc.harq_reports;
        ++fc.nacks;
        ++fc.cqi_reports;
        if (ev.kind == FeedbackKind::Nack) {
          nack = true;
          if (ev.attached_cqi) attached.push_back(*ev.attached_cqi);
        }
      }
      if (!nack && cell.feedback_rng.bernoulli(perr)) nack = true;
      if (first) cell.recovery.on_new_data(!nack);
      if (!attached.empty()) {
        std::vector<const CqiReport*> ptrs;
        for (const CqiReport& r : attached) ptrs.push_back(&r);
        const AggregateCqi agg = aggregate_cqi(ptrs);
        cell.recovery.on_nack(link.select_mcs(agg.cqi, p.subbands).mcs);
      }
    }
    if (measured) feedback += fc;
    return nack;
  }

  Block make_block(int mcs, std::vector<int> subbands, const std::vector<int>& slots, long frame_id,
                   long bits, int max_tx, bool blind) {
    Block b;
    std::vector<long> ids;
    ids.reserve(slots.size());
    for (int s : slots) ids.push_back(ues[s].id);
    b.proc = HarqProcess(next_tb++, mcs, std::move(subbands), std::move(ids), max_tx);
    b.proc.frame_id = frame_id;
    b.proc.bits = bits;
    b.proc.first_tx_tti = tti;
    b.proc.blind = blind;
    b.slots = slots;
    return b;
  }

  void add_entry(Allocation& alloc, FlowKind kind, long flow, const Block& b, bool retx) {
    AllocationEntry e;
    e.kind = kind;
    e.flow_id = flow;
    e.subbands = b.proc.subbands;
    e.mcs = b.proc.mcs;
    e.retransmission = retx;
    e.tbs_bits = link.transport_block_size(b.proc.mcs, static_cast<int>(b.proc.subbands.size()));
    alloc.entries.push_back(std::move(e));
  }

  // -------------------------------------------------------- scheduling

  void schedule_ptp(int c, SubbandPool& pool, Allocation& alloc) {
    CellState& cell = cells[c];
    for (int slot : cell.members) {
      Ue& ue = ues[slot];
      for (std::size_t i = 0; i < ue.blocks.size();) {
        Block& b = ue.blocks[i];
        if (ue.scheduled_tti == tti || b.proc.next_eligible_tti > tti || !ue.report.valid()) {
          ++i;
          continue;
        }
        const std::size_t need = b.proc.subbands.size();
        const std::vector<int> ranked = best_free_subbands(ue.report.cqi, pool);
        if (ranked.size() < need) {
          ++i;
          continue;
        }
        b.proc.subbands.assign(ranked.begin(), ranked.begin() + static_cast<long>(need));
        pool.take(b.proc.subbands);
        add_entry(alloc, FlowKind::Ptp, ue.id, b, true);
        ue.scheduled_tti = tti;
        if (transmit(cell, b)) {
          ue.blocks.erase(ue.blocks.begin() + static_cast<long>(i));
        } else {
          ++i;
        }
      }
    }

    struct Candidate {
      double weight;
      long id;
      int slot;
    };
    std::vector<Candidate> cand;
    for (int slot : cell.members) {
      Ue& ue = ues[slot];
      if (ue.scheduled_tti == tti || ue.queue.empty() || !ue.report.valid()) continue;
      if (static_cast<int>(ue.blocks.size()) >= cfg.max_harq_tx) continue;
      const double quality = wideband_quality(ue.report.cqi) / link.max_cqi();
      const double age = static_cast<double>(tti - ue.queue.front().created_tti) *
                         SimulationConfig::kTtiSeconds;
      cand.push_back({ptp_weight(quality, age, cfg.age_weight_beta, cfg.age_ref_s), ue.id, slot});
    }
    std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
      return a.weight != b.weight ? a.weight > b.weight : a.id < b.id;
    });
    for (const Candidate& k : cand) {
      if (pool.free_count() == 0) break;
      Ue& ue = ues[k.slot];
      QueuedFrame& head = ue.queue.front();
      const std::vector<int> ranked = best_free_subbands(ue.report.cqi, pool);
      SubbandChoice choice = choose_adaptive(link, ue.report.cqi, ranked, head.untransmitted,
                                                cfg.ptp_min_tb_bits, cfg.ptp_floor_tb_bits, cfg.ptp_efficiency_tolerance);
      if (choice.subbands.empty()) continue;
      const long bits = std::min(choice.tbs_bits, head.untransmitted);
      Block b = make_block(choice.mcs, std::move(choice.subbands), {k.slot}, head.frame_id, bits,
                           cfg.max_harq_tx, false);
      head.untransmitted -= bits;
      if (head.untransmitted <= 0) ue.queue.pop_front();
      pool.take(b.proc.subbands);
      add_entry(alloc, FlowKind::Ptp, ue.id, b, false);
      ue.scheduled_tti = tti;
      if (!transmit(cell, b)) ue.blocks.push_back(std::move(b));
    }
  }

  long head_of_line_tti(const CellState& cell) const {
    long oldest = std::numeric_limits<long>::max();
    if (!cell.queue.empty()) oldest = cell.queue.front().created_tti;
    for (const Block& b : cell.blocks) {
      if (b.proc.next_eligible_tti <= tti) oldest = std::min(oldest, source.creation_tti(b.proc.frame_id));
    }
    return oldest;
  }

  std::vector<int> receivers_of(const CellState& cell, long frame_id) const {
    std::vector<int> out;
    for (int slot : cell.members) {
      if (ues[slot].first_frame <= frame_id) out.push_back(slot);
    }
    return out;
  }

  void schedule_fixed(int c, SubbandPool& pool, Allocation& alloc) {
    CellState& cell = cells[c];
    const int n = fixed_subbands;
    auto lowest_free = [&]() {
      std::vector<int> f = pool.free_subbands();
      if (static_cast<int>(f.size()) > n) f.resize(n);
      return f;
    };
    for (std::size_t i = 0; i < cell.blocks.size();) {
      Block& b = cell.blocks[i];
      if (b.proc.next_eligible_tti > tti || pool.free_count() < n) {
        ++i;
        continue;
      }
      b.proc.subbands = lowest_free();
      pool.take(b.proc.subbands);
      add_entry(alloc, FlowKind::Mbms, c, b, true);
      if (transmit(cell, b)) {
        cell.blocks.erase(cell.blocks.begin() + static_cast<long>(i));
      } else {
        ++i;
      }
    }
    if (cell.queue.empty() || static_cast<int>(cell.blocks.size()) >= cfg.max_harq_tx ||
        pool.free_count() < n) {
      return;
    }
    QueuedFrame& head = cell.queue.front();
    const long bits = std::min(link.transport_block_size(cfg.fixed_ptm_mcs, n), head.untransmitted);
    Block b = make_block(cfg.fixed_ptm_mcs, lowest_free(), receivers_of(cell, head.frame_id),
                         head.frame_id, bits, cfg.fixed_ptm_transmissions, true);
    head.untransmitted -= bits;
    if (head.untransmitted <= 0) cell.queue.pop_front();
    pool.take(b.proc.subbands);
    add_entry(alloc, FlowKind::Mbms, c, b, false);
    if (!transmit(cell, b)) cell.blocks.push_back(std::move(b));
  }

  void schedule_adaptive(int c, SubbandPool& pool, Allocation& alloc) {
    CellState& cell = cells[c];
    if (cell.members.empty()) {
      cell.blocks.clear();
      return;
    }
    const bool nack_oriented = scheme == FeedbackScheme::NackOriented;
    AggregateCqi agg;
    if (!nack_oriented) {
      std::vector<const CqiReport*> reports;
      reports.reserve(cell.members.size());
      for (int slot : cell.members) reports.push_back(&ues[slot].report);
      agg = aggregate_cqi(reports, tti, cfg.cqi_stale_ttis);
      if (agg.empty()) return;
    }
    bool gate_closed = false;
    if (cfg.mode == Mode::PtmAdaptiveMinCqi) {
      gate_closed = !gate.allowed(wideband_quality(agg.cqi));
      if (measured) {
        ++gate_checks;
        if (gate_closed) ++gated_ttis;
      }
    }

    while (!cell.queue.empty() && receivers_of(cell, cell.queue.front().frame_id).empty()) {
      cell.queue.pop_front();
    }
    const bool retx_due = std::any_of(cell.blocks.begin(), cell.blocks.end(), [&](const Block& b) {
      return b.proc.next_eligible_tti <= tti;
    });
    const bool new_possible =
        !cell.queue.empty() && static_cast<int>(cell.blocks.size()) < cfg.max_harq_tx;
    if (!retx_due && !new_possible) return;
    if (gate_closed && tti - head_of_line_tti(cell) < cfg.mincqi_max_hold_ttis) return;

    for (std::size_t i = 0; i < cell.blocks.size();) {
      Block& b = cell.blocks[i];
      if (b.proc.next_eligible_tti > tti) {
        ++i;
        continue;
      }
      const int need = static_cast<int>(b.proc.subbands.size());
      std::vector<int> bands;
      if (nack_oriented) {
        bands = contiguous_free_block(pool, need);
      } else {
        bands = best_free_subbands(agg.cqi, pool);
        if (static_cast<int>(bands.size()) > need) bands.resize(need);
      }
      if (static_cast<int>(bands.size()) < need) {
        ++i;
        continue;
      }
      b.proc.subbands = std::move(bands);
      pool.take(b.proc.subbands);
      add_entry(alloc, FlowKind::Mbms, c, b, true);
      if (transmit(cell, b)) {
        cell.blocks.erase(cell.blocks.begin() + static_cast<long>(i));
      } else {
        ++i;
      }
    }

    if (cell.queue.empty() || static_cast<int>(cell.blocks.size()) >= cfg.max_harq_tx ||
        pool.free_count() == 0) {
      return;
    }
    QueuedFrame& head = cell.queue.front();
    int mcs = 0;
    std::vector<int> bands;
    long tbs = 0;
    if (nack_oriented) {
      mcs = cell.recovery.mcs();
      const int want = subbands_for_bits(link, mcs, head.untransmitted, pool.free_count());
      bands = contiguous_free_block(pool, want);
      tbs = link.transport_block_size(mcs, static_cast<int>(bands.size()));
    } else {
      const std::vector<int> ranked = best_free_subbands(agg.cqi, pool);
      SubbandChoice choice = choose_adaptive(link, agg.cqi, ranked, head.untransmitted,
                                             cfg.ptm_min_tb_bits, cfg.ptm_floor_tb_bits, cfg.ptm_efficiency_tolerance);
      mcs = choice.mcs;
      bands = std::move(choice.subbands);
      tbs = choice.tbs_bits;
    }
    if (bands.empty()) return;
    const long bits = std::min(tbs, head.untransmitted);
    Block b = make_block(mcs, std::move(bands), receivers_of(cell, head.frame_id), head.frame_id,
                         bits, cfg.max_harq_tx, false);
    head.untransmitted -= bits;
    if (head.untransmitted <= 0) cell.queue.pop_front();
    pool.take(b.proc.subbands);
    add_entry(alloc, FlowKind::Mbms, c, b, false);
    if (!transmit(cell, b)) cell.blocks.push_back(std::move(b));
  }

  void schedule_cell(int c) {
    CellState& cell = cells[c];
    SubbandPool pool(num_subbands);
    Allocation alloc;
    alloc.tti = tti;
    alloc.cell = c;
    switch (cfg.mode) {
      case Mode::Ptp: schedule_ptp(c, pool, alloc); break;
      case Mode::PtmFixed: schedule_fixed(c, pool, alloc); break;
      default: schedule_adaptive(c, pool, alloc); break;
    }
    const int video = pool.size() - pool.free_count();
    const int bg = cell.load.background_request(video, pool.free_count());
    AllocationEntry background;
    background.kind = FlowKind::Background;
    for (int s : cell.bg_order) {
      if (static_cast<int>(background.subbands.size()) >= bg) break;
      if (pool.is_free(s)) background.subbands.push_back(s);
    }
    pool.take(background.subbands);
    if (!background.subbands.empty()) alloc.entries.push_back(std::move(background));

    if (!allocation_disjoint(alloc, num_subbands) || alloc.mask() != pool.used_mask()) {
      ++violations;
      throw InvariantViolation("cell " + std::to_string(c) + ": overlapping subband allocation");
    }
    const int used = alloc.used_subbands();
    cell.load.record(used);
    cell.activity = alloc.mask();

    if (!measured) return;
    used_subband_ttis += used;
    const double watts = accrue_power(video, cfg.tx_power_w, num_subbands);
    video_power += watts;
    if (!cell.members.empty()) {
      user_power += watts / static_cast<double>(cell.members.size());
      ++user_power_samples;
    }
    for (const AllocationEntry& e : alloc.entries) {
      if (e.kind == FlowKind::Background) continue;
      tx_bits += e.tbs_bits;
      ++tx_blocks;
    }
  }

  // ------------------------------------------------------------- loop

  void sample_worst_users() {
    if (!cfg.collect_worst_user_samples || !measured || tti % cfg.cqi_period_ttis != 0) return;
    for (int c = 0; c < geom.num_cells(); ++c) {
      double worst = std::numeric_limits<double>::infinity();
      int n = 0;
      for (int slot : cells[c].members) {
        const Ue& ue = ues[slot];
        if (!ue.has_wideband) continue;
        worst = std::min(worst, ue.wideband_db);
        ++n;
      }
      if (n > 0) result.worst_user.push_back({tti, c, n, worst});
    }
  }

  void step() {
    measured = tti >= cfg.warmup_ttis;
    if (cfg.mode == Mode::PtmAdaptiveMinCqi && tti == cfg.warmup_ttis && !gate.calibrated() &&
        gate.sample_count() > 0) {
      gate.calibrate(cfg.mincqi_percentile);
    }
    for (std::size_t c = 0; c < cells.size(); ++c) activity_prev[c] = cells[c].activity;

    for (int slot = 0; slot < static_cast<int>(ues.size()); ++slot) {
      if (ues[slot].end_tti <= tti) {
        depart(slot, tti);
        spawn(slot);
      }
    }
    if (tti > 0 && tti % cfg.mobility_update_ttis == 0) {
      const double dt = cfg.mobility_update_ttis * SimulationConfig::kTtiSeconds;
      for (Ue& ue : ues) {
        ue.pos = step_mobility(ue.pos, dt, ue.mobility_rng, geom, cfg.heading_redraw_s);
        refresh_gains(ue);
      }
    }
    for (Ue& ue : ues) {
      if ((tti - ue.spawn_tti) % cfg.cqi_period_ttis == 0) measure_cqi(ue);
    }
    generate_frames();
    drop_stale_frames();
    for (int c = 0; c < geom.num_cells(); ++c) schedule_cell(c);
    sample_worst_users();
  }

  RunResult run() {
    const long end = cfg.warmup_ttis + cfg.duration_ttis;
    ues.resize(cfg.population());
    tti = 0;
    for (int slot = 0; slot < static_cast<int>(ues.size()); ++slot) spawn(slot);
    for (tti = 0; tti < end; ++tti) {
      try {
        step();
      } catch (const InvariantViolation& e) {
        throw InvariantViolation("TTI " + std::to_string(tti) + ": " + e.what());
      }
      if (cfg.max_sessions > 0 && static_cast<long>(result.sessions.size()) >= cfg.max_sessions) {
        ++tti;
        break;
      }
    }
    for (Ue& ue : ues) {
      ue.playout.finish(tti);
      record_session(ue);
    }
    finalize();
    return std::move(result);
  }

  void finalize() {
    MetricsRecord& m = result.metrics;
    m.mode = cfg.mode;
    m.scheme = scheme;
    m.users_per_cell = cfg.users_per_cell;
    m.seed = cfg.seed;
    m.measured_ttis = std::max(0L, tti - cfg.warmup_ttis);
    const double cell_ttis = static_cast<double>(m.measured_ttis) * geom.num_cells();
    if (cell_ttis > 0) {
      m.power_per_group_w = video_power / cell_ttis;
      m.total_load = static_cast<double>(used_subband_ttis) / (cell_ttis * num_subbands);
    }
    if (user_power_samples > 0) m.power_per_user_w = user_power / user_power_samples;
    m.sessions = static_cast<long>(result.sessions.size());
    m.satisfied = std::count_if(result.sessions.begin(), result.sessions.end(),
                                [](const SessionRecord& s) { return s.satisfied; });
    m.usr = usr(result.sessions);
    m.harq_blocks = static_cast<long>(attempts.size());
    m.max_harq_attempts = attempts.empty() ? 0 : *std::max_element(attempts.begin(), attempts.end());
    m.avg_harq_attempts = avg_harq_attempts(attempts);
    m.scheduled_blocks = tx_blocks;
    m.transmit_rate_kbps = transmit_rate_kbps(tx_bits, tx_blocks, SimulationConfig::kTtiSeconds);
    m.feedback = feedback;
    m.gate_checks = gate_checks;
    m.gated_ttis = gated_ttis;
    if (gate_checks > 0) m.gated_fraction = static_cast<double>(gated_ttis) / gate_checks;
    m.disjointness_violations = violations;
    m.fixed_mcs = cfg.mode == Mode::PtmFixed ? cfg.fixed_ptm_mcs : -1;
    m.fixed_subbands = fixed_subbands;
    m.gate_threshold = gate.calibrated() ? gate.threshold() : 0.0;
  }
};

Simulator::Simulator(const SimulationConfig& cfg) : impl_(std::make_unique<Impl>(cfg)) {}
Simulator::~Simulator() = default;

RunResult Simulator::run() { return impl_->run(); }

bool fixed_ptm_fits(const SimulationConfig& cfg, const LinkModel& link, int mcs, int n) {
  const long tbs = link.transport_block_size(mcs, n);
  if (tbs <= 0) return false;
  const long blocks = (cfg.frame_bits() + tbs - 1) / tbs;
  const long tx = cfg.fixed_ptm_transmissions;
  const long busy = (tx - 1) * cfg.harq_rtt_ttis + 1;
  const bool fits_band = blocks * n * tx <= static_cast<long>(cfg.frame_interval_ttis) * cfg.num_subbands;
  const bool fits_harq = blocks * busy <= static_cast<long>(cfg.max_harq_tx) * cfg.frame_interval_ttis;
  return fits_band && fits_harq;
}

int fixed_ptm_subbands(const SimulationConfig& cfg, const LinkModel& link, int mcs) {
  int best = cfg.num_subbands;
  long best_cost = std::numeric_limits<long>::max();
  for (int n = cfg.num_subbands; n >= 1; --n) {
    if (!fixed_ptm_fits(cfg, link, mcs, n)) continue;
    const long tbs = link.transport_block_size(mcs, n);
    const long cost = (cfg.frame_bits() + tbs - 1) / tbs * n;
    if (cost < best_cost) {
      best_cost = cost;
      best = n;
    }
  }
  return best;
}

RunResult run_simulation(const SimulationConfig& cfg) {
  if (cfg.mode == Mode::PtmFixed && cfg.fixed_ptm_mcs < 0) {
    SimulationConfig calibrated = cfg;
    calibrated.fixed_ptm_mcs = calibrate_fixed_ptm(cfg).mcs;
    return Simulator(calibrated).run();
  }
  return Simulator(cfg).run();
}

}  // namespace mbms
