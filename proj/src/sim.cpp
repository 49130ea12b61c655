#include "qkdnet/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <tuple>

#include <json.hpp>

#include "qkdnet/forwarding.hpp"
#include "qkdnet/keystore.hpp"
#include "qkdnet/link_model.hpp"
#include "qkdnet/q3p.hpp"

namespace qkdnet {

using ordered_json = nlohmann::ordered_json;

namespace {
constexpr double kRateEps = 1e-9;

const char* state_name(CircuitState s) {
    switch (s) {
        case CircuitState::Establishing: return "Establishing";
        case CircuitState::Active: return "Active";
        case CircuitState::Rerouting: return "Rerouting";
        case CircuitState::Closed: return "Closed";
    }
    return "?";
}
}  // namespace

struct Simulation::Impl {
    // ---- immutable setup
    Scenario sc;
    TraceLevel trace_level = TraceLevel::None;
    double duration = 0.0;
    std::uint64_t seed = 0;
    Q3pConfig q3p_cfg;

    std::vector<std::string> node_ids;
    std::map<std::string, std::uint32_t> node_index;
    std::vector<bool> stub;

    struct OutQueue {
        std::deque<QueuedPacket> gr, be;
    };

    struct LinkRt {
        std::string id;
        std::uint32_t a = 0, b = 0;
        LinkProfile profile;
        KeyStore store;
        double latency = 0.001;
        LinkStatus status = LinkStatus::Up;
        double reserved = 0.0;
        // Key generation is metered against absolute elapsed time within the
        // current up-segment, so tick jitter never loses or invents bits:
        // bits(t) = floor(rate * (t - segment_start)).
        double keygen_seg_start = 0.0;
        std::uint64_t keygen_seg_bits = 0;
        ChannelState chan[2];
        Q3pSender sender[2];
        OutQueue outq[2];
        std::map<std::uint32_t, Reassembler> reasm[2];
        double down_since = -1.0;
        double seconds_down = 0.0;
        LinkMetrics met;
        RngStream key_rng;

        LinkRt(std::uint32_t index, std::uint64_t capacity)
            : store(index, capacity) {}
    };
    std::vector<LinkRt> links;
    std::map<std::string, std::uint32_t> link_index;

    std::vector<std::vector<LinkStateRecord>> views;

    struct FwdVal {
        std::uint32_t out_link = 0;
        std::uint32_t epoch = 0;
    };
    // (circuit, node, in_link) -> next hop; entries are per path generation
    std::map<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>, FwdVal> fwd;

    struct Pending {
        BitString payload;
        double offered_at = 0.0;
    };

    struct CircuitRt {
        VirtualCircuit vc;
        std::string demand_id;
        std::uint32_t demand_index = 0;
        RngStream session_rng;
        RngStream arrival_rng;
        std::map<std::uint64_t, Pending> outstanding;  // emitted, not yet at egress
        std::uint64_t highest_delivered = 0;
        std::map<std::uint32_t, std::uint64_t> last_seq_on_link;
        std::uint64_t resend_floor = 0;  // seqs at or below drained past the last failure
        std::int64_t periodic_remaining = -1;
        double gr_interval = 0.0;
        std::uint64_t digest = 14695981039346656037ull;
    };
    std::map<std::uint32_t, CircuitRt> circuits;
    std::uint32_t next_circuit_id = 1;  // 0 is the control channel

    struct Event {
        enum class Kind {
            KeyGenTick,
            Demand,
            Arrival,
            GrEmission,
            Activate,
            FrameArrival,
            Flood,
            Attack,
            MetricSample
        };
        Event() = default;
        explicit Event(Kind k) : kind(k) {}

        Kind kind = Kind::KeyGenTick;
        std::uint32_t index = 0;  // demand/attack index, circuit id, or link id
        std::uint32_t dir = 0;
        std::uint32_t epoch = 0;  // Activate guard against superseded reroutes
        Q3pFrame frame;
        KeyBlock key;
    };
    std::map<std::pair<double, std::uint64_t>, Event> queue;
    std::uint64_t next_ordinal = 0;
    double now = 0.0;
    bool ran = false;

    NetworkMetrics met;
    std::vector<std::string> trace;

    // run audits
    std::set<std::uint64_t> frame_block_refs;
    std::uint64_t dup_block_refs = 0;
    std::uint64_t fidelity_bad = 0;
    std::uint64_t delivered_total = 0;
    std::uint64_t plaintext_hits = 0;

    // ---- construction -----------------------------------------------------

    Impl(Scenario scenario, const RunOptions& opts) : sc(std::move(scenario)) {
        ensure_valid(sc);
        trace_level = opts.trace;
        if (opts.seed) sc.seed = *opts.seed;
        if (opts.sample_interval_s) sc.config.sample_interval_s = *opts.sample_interval_s;
        seed = sc.seed;
        duration = sc.duration_s;
        q3p_cfg = {sc.config.max_frame_payload_bits, sc.config.auth_tag_key_bits};

        node_ids.reserve(sc.nodes.size());
        for (const NodeSpec& n : sc.nodes) {
            node_index[n.id] = static_cast<std::uint32_t>(node_ids.size());
            node_ids.push_back(n.id);
            stub.push_back(n.qan);
        }

        links.reserve(sc.links.size());
        for (std::size_t i = 0; i < sc.links.size(); ++i) {
            const LinkSpec& ls = sc.links[i];
            const std::uint64_t cap =
                ls.store_capacity_bits ? ls.store_capacity_bits : sc.config.default_store_capacity_bits;
            LinkRt L(static_cast<std::uint32_t>(i), cap);
            L.id = ls.id;
            L.a = node_index.at(ls.node_a);
            L.b = node_index.at(ls.node_b);
            L.profile = ls.profile;
            L.latency = ls.latency_s >= 0 ? ls.latency_s : sc.config.channel_latency_s;
            for (int d = 0; d < 2; ++d) {
                L.chan[d].window = sc.config.channel_window;
                L.chan[d].latency_s = L.latency;
                L.sender[d] = Q3pSender(q3p_cfg);
            }
            L.status = effective_link_rate(L.profile) > 0 ? LinkStatus::Up : LinkStatus::Down;
            if (L.status == LinkStatus::Down) L.down_since = 0.0;
            L.key_rng = RngStream::derive(seed, "keys/" + ls.id);
            link_index[ls.id] = static_cast<std::uint32_t>(i);
            links.push_back(std::move(L));
        }

        views.assign(node_ids.size(), ground_truth_records());

        met.duration_s = duration;
        met.seed = seed;

        schedule(std::min(sc.config.keygen_tick_s, duration), Event{Event::Kind::KeyGenTick});
        if (sc.config.sample_interval_s > 0 && sc.config.sample_interval_s <= duration) {
            schedule(sc.config.sample_interval_s, Event{Event::Kind::MetricSample});
        }
        for (std::size_t i = 0; i < sc.demands.size(); ++i) {
            Event e{Event::Kind::Demand};
            e.index = static_cast<std::uint32_t>(i);
            schedule(sc.demands[i].time, std::move(e));
        }
        for (std::size_t i = 0; i < sc.attacks.size(); ++i) {
            Event e{Event::Kind::Attack};
            e.index = static_cast<std::uint32_t>(i);
            schedule(sc.attacks[i].time, std::move(e));
        }
    }

    void schedule(double t, Event e) { queue.emplace(std::make_pair(t, next_ordinal++), std::move(e)); }

    std::vector<LinkStateRecord> ground_truth_records() const {
        std::vector<LinkStateRecord> out;
        out.reserve(links.size());
        for (std::size_t i = 0; i < links.size(); ++i) {
            const LinkRt& L = links[i];
            LinkStateRecord r;
            r.link_id = static_cast<std::uint32_t>(i);
            r.node_a = L.a;
            r.node_b = L.b;
            r.effective_rate = effective_link_rate(L.profile);
            r.fill_fraction = L.store.fill_fraction();
            r.reserved_rate = L.reserved;
            r.status = L.status;
            out.push_back(r);
        }
        return out;
    }

    // ---- trace ------------------------------------------------------------

    void emit_trace(ordered_json j) { trace.push_back(j.dump()); }

    ordered_json trace_base(const char* ev) {
        ordered_json j;
        j["t"] = now;
        j["ev"] = ev;
        return j;
    }

    std::vector<std::string> path_names(const std::vector<std::uint32_t>& ns) const {
        std::vector<std::string> out;
        out.reserve(ns.size());
        for (std::uint32_t n : ns) out.push_back(node_ids[n]);
        return out;
    }

    // ---- control-plane accounting ------------------------------------------

    // Control messages carry no secret payload; each charges one tag's worth
    // of key. A store too depleted for the tag still lets the message through
    // (signaling must not deadlock) and the lapse is counted.
    void charge_control(LinkRt& L) {
        ++L.met.control_messages;
        if (auto block = L.store.consume(q3p_cfg.auth_tag_key_bits)) {
            L.met.key_bits_consumed_auth += q3p_cfg.auth_tag_key_bits;
            ++L.met.frames_sent;
        } else {
            ++L.met.control_unauth_sends;
        }
    }

    // ---- key generation -----------------------------------------------------

    void on_keygen_tick() {
        for (std::size_t i = 0; i < links.size(); ++i) {
            LinkRt& L = links[i];
            const double rate = effective_link_rate(L.profile);
            if (rate <= 0 || L.status != LinkStatus::Up) continue;
            const auto target =
                static_cast<std::uint64_t>(rate * (now - L.keygen_seg_start));
            if (target <= L.keygen_seg_bits) continue;
            const std::uint64_t fresh = target - L.keygen_seg_bits;
            L.keygen_seg_bits = target;
            L.store.deposit(fresh, L.key_rng);
            drain(static_cast<std::uint32_t>(i), 0);
            drain(static_cast<std::uint32_t>(i), 1);
        }
        if (now < duration)
            schedule(std::min(now + sc.config.keygen_tick_s, duration), Event{Event::Kind::KeyGenTick});
    }

    // ---- transmission --------------------------------------------------------

    void enqueue_packet(std::uint32_t li, CircuitRt& cr, std::uint64_t seq, BitString payload) {
        const std::uint32_t ingress_node = cr.vc.path_nodes.front();
        const int dir = links[li].a == ingress_node ? 0 : 1;
        QueuedPacket pkt{cr.vc.circuit_id, seq, cr.vc.epoch, cr.vc.guaranteed(), std::move(payload)};
        auto& q = links[li].outq[dir];
        (pkt.guaranteed ? q.gr : q.be).push_back(std::move(pkt));
    }

    void drain(std::uint32_t li, int dir) {
        LinkRt& L = links[li];
        if (L.status != LinkStatus::Up) return;
        OutQueue& q = L.outq[dir];
        ChannelState& ch = L.chan[dir];
        Q3pSender& snd = L.sender[dir];
        while (true) {
            auto pick = pick_transmittable(q.gr, q.be, L.store.available_bits(), q3p_cfg);
            if (!pick) break;
            auto& dq = (*pick == PickClass::Guaranteed) ? q.gr : q.be;
            const std::uint32_t nf = snd.fragments_for(dq.front().payload.size());
            if (ch.in_flight + nf > ch.window) break;
            QueuedPacket pkt = std::move(dq.front());
            dq.pop_front();
            auto sent = snd.send_message(pkt.circuit_id, pkt.seq, pkt.epoch, pkt.payload, L.store);
            if (!sent) break;

            auto cit = circuits.find(pkt.circuit_id);
            if (cit != circuits.end()) {
                auto& floor_ref = cit->second.last_seq_on_link[li];
                floor_ref = std::max(floor_ref, pkt.seq);
            }
            L.met.frames_sent += sent->frames.size();
            L.met.messages_sent += 1;
            L.met.key_bits_consumed_otp += pkt.payload.size();
            L.met.key_bits_consumed_auth +=
                static_cast<std::uint64_t>(sent->frames.size()) * q3p_cfg.auth_tag_key_bits;

            for (std::size_t i = 0; i < sent->frames.size(); ++i) {
                Q3pFrame& fr = sent->frames[i];
                if (!frame_block_refs.insert(fr.key_block_ref).second) ++dup_block_refs;
                const std::uint64_t off =
                    static_cast<std::uint64_t>(fr.fragment_index) * q3p_cfg.max_frame_payload_bits;
                if (fr.ciphertext == pkt.payload.slice(off, fr.ciphertext.size())) ++plaintext_hits;
                if (trace_level == TraceLevel::Frame) {
                    ordered_json j = trace_base("frame");
                    j["link"] = L.id;
                    j["dir"] = dir;
                    j["circuit"] = fr.circuit_id;
                    j["seq"] = fr.packet_seq;
                    j["frag"] = fr.fragment_index;
                    j["bits"] = fr.ciphertext.size();
                    j["key_bits"] = fr.ciphertext.size() + q3p_cfg.auth_tag_key_bits;
                    j["block"] = fr.key_block_ref;
                    emit_trace(std::move(j));
                }
                ++ch.in_flight;
                Event ev{Event::Kind::FrameArrival};
                ev.index = li;
                ev.dir = static_cast<std::uint32_t>(dir);
                ev.frame = std::move(fr);
                ev.key = std::move(sent->blocks[i]);
                schedule(now + L.latency, std::move(ev));
            }
        }
    }

    void on_frame_arrival(Event& ev) {
        LinkRt& L = links[ev.index];
        ChannelState& ch = L.chan[ev.dir];
        if (ch.in_flight > 0) --ch.in_flight;
        const std::uint32_t node = ev.dir == 0 ? L.b : L.a;
        ReceivedFragment rf = receive_frame(ev.frame, ev.key, q3p_cfg);
        if (!rf.auth_ok) {
            ++L.met.auth_failures;
        } else {
            auto done = L.reasm[ev.dir][ev.frame.circuit_id].add(ev.frame, std::move(rf.plaintext));
            if (done)
                process_packet(node, ev.index, ev.frame.circuit_id, ev.frame.packet_seq,
                               ev.frame.epoch, std::move(*done));
        }
        drain(ev.index, static_cast<int>(ev.dir));
    }

    void process_packet(std::uint32_t node, std::uint32_t in_link, std::uint32_t cid,
                        std::uint64_t seq, std::uint32_t epoch, BitString payload) {
        auto it = circuits.find(cid);
        if (it == circuits.end()) return;
        CircuitRt& cr = it->second;
        CircuitMetrics& cm = met.circuits.at(cid);
        if (node == cr.vc.request.dest_node) {
            if (cr.vc.state == CircuitState::Closed) {
                ++cm.packets_stale_dropped;
                return;
            }
            auto os = cr.outstanding.find(seq);
            if (seq > cr.highest_delivered) {
                if (os != cr.outstanding.end() && os->second.payload != payload) ++fidelity_bad;
                deliver(cr, cm, seq, payload,
                        os != cr.outstanding.end() ? now - os->second.offered_at : 0.0);
            } else {
                ++cm.packets_duplicate_dropped;
            }
            if (os != cr.outstanding.end()) cr.outstanding.erase(os);
        } else {
            auto f = fwd.find(std::make_tuple(cid, node, in_link));
            if (f == fwd.end() || f->second.epoch != epoch) {
                ++cm.packets_stale_dropped;
                return;
            }
            const std::uint32_t out = f->second.out_link;
            const int dir = links[out].a == node ? 0 : 1;
            QueuedPacket pkt{cid, seq, epoch, cr.vc.guaranteed(), std::move(payload)};
            auto& q = links[out].outq[dir];
            (pkt.guaranteed ? q.gr : q.be).push_back(std::move(pkt));
            drain(out, dir);
        }
    }

    void deliver(CircuitRt& cr, CircuitMetrics& cm, std::uint64_t seq, const BitString& payload,
                 double delay) {
        cr.highest_delivered = seq;
        ++cm.packets_delivered;
        ++delivered_total;
        cm.payload_bits_delivered += payload.size();
        cm.sum_delay_s += delay;
        cm.max_delay_s = std::max(cm.max_delay_s, delay);
        cr.digest = (cr.digest ^ payload.fnv1a()) * 1099511628211ull;
        if (trace_level != TraceLevel::None) {
            ordered_json j = trace_base("deliver");
            j["circuit"] = cr.vc.circuit_id;
            j["seq"] = seq;
            j["bits"] = payload.size();
            j["delay"] = delay;
            emit_trace(std::move(j));
        }
    }

    void deliver_local(CircuitRt& cr, CircuitMetrics& cm, std::uint64_t seq) {
        auto os = cr.outstanding.find(seq);
        deliver(cr, cm, seq, os->second.payload, 0.0);
        cr.outstanding.erase(os);
    }

    // ---- demand handling ------------------------------------------------------

    void on_demand(std::uint32_t di) {
        const DemandSpec& d = sc.demands[di];
        const std::uint32_t src = node_index.at(d.source);
        const std::uint32_t dst = node_index.at(d.dest);
        PathRequest req{d.source_app, src, dst, d.dest_port, d.service, d.key_block_length};
        const double ovh = auth_overhead_fraction(d.key_block_length, q3p_cfg);
        const double demand_rate = req.service.type == ServiceType::GuaranteedRate
                                       ? req.service.nominal_rate() * (1.0 + ovh)
                                       : 0.0;
        if (src == dst) {
            create_circuit(di, std::move(req), {src}, {}, demand_rate);
            return;
        }

        RoutingTable table = compute_routes(views[src], node_ids, stub, src, sc.config.weights);
        auto rit = table.routes.find(dst);
        if (rit == table.routes.end() || rit->second.empty()) {
            reject(d, "no_path", 0.0);
            return;
        }
        const RouteEntry* chosen = pick_candidate(rit->second, req.service.type, demand_rate);
        if (!chosen) {
            if (req.service.type == ServiceType::GuaranteedRate) {
                const PathAdmission adm = admission_on(rit->second.front().links, demand_rate);
                reject(d, "insufficient_capacity", std::max(0.0, adm.min_headroom) / (1.0 + ovh));
            } else {
                reject(d, "no_path", 0.0);
            }
            return;
        }
        create_circuit(di, std::move(req), chosen->nodes, chosen->links, demand_rate);
    }

    PathAdmission admission_on(const std::vector<std::uint32_t>& plinks, double demand_rate) const {
        std::vector<double> eff, resv;
        eff.reserve(plinks.size());
        resv.reserve(plinks.size());
        for (std::uint32_t l : plinks) {
            eff.push_back(effective_link_rate(links[l].profile));
            resv.push_back(links[l].reserved);
        }
        return check_admission(eff, resv, sc.config.admission_factor, demand_rate);
    }

    // Candidate paths come from the ingress view; the reservation check runs
    // against live state, standing in for hop-by-hop setup signaling.
    const RouteEntry* pick_candidate(const std::vector<RouteEntry>& cands, ServiceType type,
                                     double demand_rate) const {
        for (const RouteEntry& cand : cands) {
            bool up = true;
            for (std::uint32_t l : cand.links)
                if (links[l].status != LinkStatus::Up) up = false;
            if (!up) continue;
            if (type == ServiceType::GuaranteedRate &&
                !admission_on(cand.links, demand_rate).admissible)
                continue;
            return &cand;
        }
        return nullptr;
    }

    void reject(const DemandSpec& d, const std::string& reason, double best_rate) {
        met.rejections.push_back({now, d.id, reason, best_rate});
        if (trace_level != TraceLevel::None) {
            ordered_json j = trace_base("reject");
            j["demand"] = d.id;
            j["reason"] = reason;
            j["best_available"] = best_rate;
            emit_trace(std::move(j));
        }
    }

    void create_circuit(std::uint32_t di, PathRequest req, std::vector<std::uint32_t> pnodes,
                        std::vector<std::uint32_t> plinks, double demand_rate) {
        const DemandSpec& d = sc.demands[di];
        const std::uint32_t cid = next_circuit_id++;
        const bool self = plinks.empty();
        const bool gr = req.service.type == ServiceType::GuaranteedRate;

        CircuitRt cr;
        cr.vc.circuit_id = cid;
        cr.vc.request = std::move(req);
        cr.vc.path_nodes = pnodes;
        cr.vc.path_links = plinks;
        cr.vc.state = self ? CircuitState::Active : CircuitState::Establishing;
        cr.vc.demanded_rate = demand_rate;
        cr.vc.bucket = TokenBucket::full(d.service, now);
        cr.demand_id = d.id;
        cr.demand_index = di;
        cr.session_rng = RngStream::derive(seed, "session/" + d.id);
        cr.arrival_rng = RngStream::derive(seed, "arrivals/" + d.id);
        cr.periodic_remaining = d.traffic.count;
        if (gr) cr.gr_interval = d.key_block_length / d.service.nominal_rate();

        CircuitMetrics cm;
        cm.demand_id = d.id;
        cm.source = d.source;
        cm.dest = d.dest;
        cm.service = gr ? "guaranteed" : "best_effort";
        cm.established_at = now;
        cm.initial_path = path_names(pnodes);
        if (self) cm.activated_at = now;
        met.circuits.emplace(cid, std::move(cm));

        if (!self) {
            install_path(cr, gr, 0);
            Event e{Event::Kind::Activate};
            e.index = cid;
            e.epoch = 0;
            schedule(now + 2.0 * path_latency(plinks), std::move(e));
        }
        if (trace_level != TraceLevel::None) {
            ordered_json j = trace_base("establish");
            j["circuit"] = cid;
            j["demand"] = d.id;
            j["service"] = gr ? "guaranteed" : "best_effort";
            j["path"] = path_names(pnodes);
            emit_trace(std::move(j));
        }
        auto [it, inserted] = circuits.emplace(cid, std::move(cr));
        (void)inserted;

        if (gr) {
            if (self) {
                Event e{Event::Kind::GrEmission};
                e.index = cid;
                schedule(now, std::move(e));
            }
        } else {
            schedule_initial_arrivals(it->second);
        }
    }

    double path_latency(const std::vector<std::uint32_t>& plinks) const {
        double s = 0.0;
        for (std::uint32_t l : plinks) s += links[l].latency;
        return s;
    }

    // Reservations, relay forwarding entries, and the two setup/confirm
    // control messages per link.
    void install_path(CircuitRt& cr, bool gr, std::uint32_t epoch) {
        const auto& pnodes = cr.vc.path_nodes;
        const auto& plinks = cr.vc.path_links;
        for (std::uint32_t l : plinks) {
            if (gr) links[l].reserved += cr.vc.demanded_rate;
            charge_control(links[l]);
            charge_control(links[l]);
        }
        for (std::size_t j = 1; j + 1 < pnodes.size(); ++j) {
            fwd[std::make_tuple(cr.vc.circuit_id, pnodes[j], plinks[j - 1])] =
                FwdVal{plinks[j], epoch};
        }
    }

    void schedule_initial_arrivals(CircuitRt& cr) {
        const TrafficPattern& tp = sc.demands[cr.demand_index].traffic;
        switch (tp.kind) {
            case TrafficPattern::Kind::None:
                break;
            case TrafficPattern::Kind::Poisson:
                schedule_arrival(cr, now + cr.arrival_rng.exponential(1.0 / tp.rate));
                break;
            case TrafficPattern::Kind::Periodic:
                if (cr.periodic_remaining != 0) schedule_arrival(cr, now + tp.interval);
                break;
            case TrafficPattern::Kind::Times:
                for (double t : tp.times)
                    if (t >= now) schedule_arrival(cr, t);
                break;
        }
    }

    void schedule_arrival(CircuitRt& cr, double t) {
        if (t > duration) return;
        Event e{Event::Kind::Arrival};
        e.index = cr.vc.circuit_id;
        schedule(t, std::move(e));
    }

    void on_arrival(std::uint32_t cid) {
        auto it = circuits.find(cid);
        if (it == circuits.end()) return;
        CircuitRt& cr = it->second;
        if (cr.vc.state == CircuitState::Closed) return;
        const DemandSpec& d = sc.demands[cr.demand_index];
        CircuitMetrics& cm = met.circuits.at(cid);
        const std::uint32_t L = cr.vc.request.key_block_length;

        ++cm.packets_offered;
        cm.payload_bits_offered += L;
        if (cr.vc.bucket.police(now, d.service.lambda_k, d.service.sigma_k)) {
            ++cm.packets_admitted;
            emit_packet(cr, cm);
        } else {
            ++cm.packets_policed;
        }

        const TrafficPattern& tp = d.traffic;
        if (tp.kind == TrafficPattern::Kind::Poisson) {
            schedule_arrival(cr, now + cr.arrival_rng.exponential(1.0 / tp.rate));
        } else if (tp.kind == TrafficPattern::Kind::Periodic) {
            if (cr.periodic_remaining > 0) --cr.periodic_remaining;
            if (cr.periodic_remaining != 0) schedule_arrival(cr, now + tp.interval);
        }
    }

    void on_gr_emission(std::uint32_t cid) {
        auto it = circuits.find(cid);
        if (it == circuits.end()) return;
        CircuitRt& cr = it->second;
        if (cr.vc.state == CircuitState::Closed) return;
        CircuitMetrics& cm = met.circuits.at(cid);
        ++cm.packets_offered;
        cm.payload_bits_offered += cr.vc.request.key_block_length;
        ++cm.packets_admitted;
        emit_packet(cr, cm);
        if (now + cr.gr_interval <= duration) {
            Event e{Event::Kind::GrEmission};
            e.index = cid;
            schedule(now + cr.gr_interval, std::move(e));
        }
    }

    // Session-key material is minted at the ingress. Until the circuit is
    // Active (initial signaling or a reroute in progress) the packet waits in
    // the outstanding buffer and is flushed on activation.
    void emit_packet(CircuitRt& cr, CircuitMetrics& cm) {
        const std::uint64_t seq = cr.vc.next_seq++;
        BitString payload = cr.session_rng.bits(cr.vc.request.key_block_length);
        cr.outstanding[seq] = Pending{payload, now};
        if (cr.vc.path_links.empty()) {
            deliver_local(cr, cm, seq);
        } else if (cr.vc.state == CircuitState::Active) {
            enqueue_packet(cr.vc.path_links.front(), cr, seq, std::move(payload));
            drain(cr.vc.path_links.front(), links[cr.vc.path_links.front()].a == cr.vc.path_nodes.front() ? 0 : 1);
        }
    }

    void on_activate(std::uint32_t cid, std::uint32_t epoch) {
        auto it = circuits.find(cid);
        if (it == circuits.end()) return;
        CircuitRt& cr = it->second;
        if (cr.vc.state == CircuitState::Closed || cr.vc.epoch != epoch) return;
        CircuitMetrics& cm = met.circuits.at(cid);
        const bool first = cm.activated_at < 0;
        cr.vc.state = CircuitState::Active;
        if (first) cm.activated_at = now;
        if (trace_level != TraceLevel::None) {
            ordered_json j = trace_base("activate");
            j["circuit"] = cid;
            j["epoch"] = epoch;
            emit_trace(std::move(j));
        }
        // flush everything not already drained past the last failure
        const std::uint32_t first_link = cr.vc.path_links.front();
        bool queued = false;
        for (auto& [seq, p] : cr.outstanding) {
            if (seq > cr.resend_floor) {
                enqueue_packet(first_link, cr, seq, p.payload);
                queued = true;
            }
        }
        if (queued)
            drain(first_link, links[first_link].a == cr.vc.path_nodes.front() ? 0 : 1);
        if (first && cr.vc.guaranteed()) {
            Event e{Event::Kind::GrEmission};
            e.index = cid;
            schedule(now, std::move(e));
        }
    }

    // ---- attacks and topology churn ------------------------------------------

    void on_attack(std::uint32_t ai) {
        const AttackSpec& a = sc.attacks[ai];
        LinkRt& L = links[link_index.at(a.link)];
        L.profile.qber = a.restore ? 0.0 : a.qber;
        const LinkStatus next =
            effective_link_rate(L.profile) > 0 ? LinkStatus::Up : LinkStatus::Down;
        if (next == L.status) return;  // no status change, no flood
        L.status = next;
        if (next == LinkStatus::Down) {
            L.down_since = now;
        } else {
            L.seconds_down += now - L.down_since;
            L.down_since = -1.0;
            L.keygen_seg_start = now;  // generation restarts from zero elapsed
            L.keygen_seg_bits = 0;
            drain(link_index.at(a.link), 0);
            drain(link_index.at(a.link), 1);
        }
        if (trace_level != TraceLevel::None) {
            ordered_json j = trace_base(a.restore ? "restore" : "attack");
            j["link"] = a.link;
            if (!a.restore) j["qber"] = a.qber;
            j["status"] = next == LinkStatus::Up ? "up" : "down";
            emit_trace(std::move(j));
        }
        schedule(now + sc.config.flood_delay_s, Event{Event::Kind::Flood});
    }

    void on_flood() {
        ++met.floods;
        for (LinkRt& L : links)
            if (L.status == LinkStatus::Up) charge_control(L);
        const auto records = ground_truth_records();
        for (auto& v : views) v = records;
        if (trace_level != TraceLevel::None) emit_trace(trace_base("flood"));

        // repair circuits whose path lost a link, oldest first
        for (auto& [cid, cr] : circuits) {
            if (cr.vc.state == CircuitState::Closed || cr.vc.path_links.empty()) continue;
            std::uint32_t bad = UINT32_MAX;
            for (std::uint32_t l : cr.vc.path_links) {
                if (links[l].status == LinkStatus::Down) {
                    bad = l;
                    break;
                }
            }
            if (bad != UINT32_MAX) reroute(cid, bad);
        }

        // shed newest reservations from any link left oversubscribed
        for (std::size_t li = 0; li < links.size(); ++li) {
            while (links[li].reserved >
                   sc.config.admission_factor * effective_link_rate(links[li].profile) + kRateEps) {
                std::uint32_t victim = 0;
                bool found = false;
                for (auto rit = circuits.rbegin(); rit != circuits.rend(); ++rit) {
                    const CircuitRt& cr = rit->second;
                    if (cr.vc.state == CircuitState::Closed || !cr.vc.guaranteed()) continue;
                    if (std::find(cr.vc.path_links.begin(), cr.vc.path_links.end(),
                                  static_cast<std::uint32_t>(li)) != cr.vc.path_links.end()) {
                        victim = rit->first;
                        found = true;
                        break;
                    }
                }
                if (!found) break;
                reroute(victim, static_cast<std::uint32_t>(li));
            }
        }
    }

    // Packets already OTP-encrypted onto the failed link drain along the old
    // path remnant; everything behind that boundary is purged and re-sent from
    // the ingress once the replacement path activates.
    void reroute(std::uint32_t cid, std::uint32_t failed_li) {
        CircuitRt& cr = circuits.at(cid);
        CircuitMetrics& cm = met.circuits.at(cid);
        const std::uint32_t old_epoch = cr.vc.epoch;
        const bool gr = cr.vc.guaranteed();

        if (gr)
            for (std::uint32_t l : cr.vc.path_links)
                links[l].reserved = std::max(0.0, links[l].reserved - cr.vc.demanded_rate);
        ++cm.reroutes;
        cr.vc.state = CircuitState::Rerouting;
        auto fit = cr.last_seq_on_link.find(failed_li);
        cr.resend_floor = fit == cr.last_seq_on_link.end() ? 0 : fit->second;

        for (std::uint32_t l : cr.vc.path_links) {
            for (int d = 0; d < 2; ++d) {
                auto purge = [&](std::deque<QueuedPacket>& dq) {
                    std::erase_if(dq, [&](const QueuedPacket& p) {
                        return p.circuit_id == cid && p.seq > cr.resend_floor;
                    });
                };
                purge(links[l].outq[d].gr);
                purge(links[l].outq[d].be);
            }
        }
        std::size_t fi = 0;
        while (fi < cr.vc.path_links.size() && cr.vc.path_links[fi] != failed_li) ++fi;
        for (std::size_t j = 1; j <= fi && j < cr.vc.path_nodes.size(); ++j) {
            auto key = std::make_tuple(cid, cr.vc.path_nodes[j], cr.vc.path_links[j - 1]);
            auto eit = fwd.find(key);
            if (eit != fwd.end() && eit->second.epoch == old_epoch) fwd.erase(eit);
        }

        const std::uint32_t src = cr.vc.path_nodes.front();
        const std::uint32_t dst = cr.vc.request.dest_node;
        RoutingTable table = compute_routes(views[src], node_ids, stub, src, sc.config.weights);
        auto rit = table.routes.find(dst);
        const RouteEntry* chosen =
            rit == table.routes.end()
                ? nullptr
                : pick_candidate(rit->second, cr.vc.request.service.type, cr.vc.demanded_rate);
        if (!chosen) {
            teardown(cr, cm, "no_admissible_path");
            return;
        }
        cr.vc.epoch = old_epoch + 1;
        cr.vc.path_nodes = chosen->nodes;
        cr.vc.path_links = chosen->links;
        install_path(cr, gr, cr.vc.epoch);
        Event e{Event::Kind::Activate};
        e.index = cid;
        e.epoch = cr.vc.epoch;
        schedule(now + 2.0 * path_latency(cr.vc.path_links), std::move(e));
        if (trace_level != TraceLevel::None) {
            ordered_json j = trace_base("reroute");
            j["circuit"] = cid;
            j["epoch"] = cr.vc.epoch;
            j["path"] = path_names(cr.vc.path_nodes);
            emit_trace(std::move(j));
        }
    }

    void teardown(CircuitRt& cr, CircuitMetrics& cm, const std::string& reason) {
        const std::uint32_t cid = cr.vc.circuit_id;
        cr.vc.state = CircuitState::Closed;
        cm.closed_at = now;
        cm.teardown_reason = reason;
        for (LinkRt& L : links) {
            for (int d = 0; d < 2; ++d) {
                std::erase_if(L.outq[d].gr,
                              [&](const QueuedPacket& p) { return p.circuit_id == cid; });
                std::erase_if(L.outq[d].be,
                              [&](const QueuedPacket& p) { return p.circuit_id == cid; });
            }
        }
        fwd.erase(fwd.lower_bound(std::make_tuple(cid, 0u, 0u)),
                  fwd.lower_bound(std::make_tuple(cid + 1, 0u, 0u)));
        cr.outstanding.clear();
        for (std::uint32_t l : cr.vc.path_links)
            if (links[l].status == LinkStatus::Up) charge_control(links[l]);
        if (trace_level != TraceLevel::None) {
            ordered_json j = trace_base("teardown");
            j["circuit"] = cid;
            j["reason"] = reason;
            emit_trace(std::move(j));
        }
    }

    // ---- sampling -----------------------------------------------------------

    void on_metric_sample() {
        SamplePoint p;
        p.time = now;
        for (const LinkRt& L : links) {
            p.link_fill[L.id] = L.store.fill_fraction();
            p.link_available_bits[L.id] = static_cast<double>(L.store.available_bits());
        }
        met.samples.push_back(std::move(p));
        if (now + sc.config.sample_interval_s <= duration)
            schedule(now + sc.config.sample_interval_s, Event{Event::Kind::MetricSample});
    }

    // ---- main loop ------------------------------------------------------------

    void run() {
        if (ran) return;
        ran = true;
        while (!queue.empty()) {
            auto it = queue.begin();
            if (it->first.first > duration) break;
            Event ev = std::move(it->second);
            now = it->first.first;
            queue.erase(it);
            ++met.events_processed;
            dispatch(ev);
        }
        now = duration;
        finalize();
    }

    void dispatch(Event& ev) {
        switch (ev.kind) {
            case Event::Kind::KeyGenTick: on_keygen_tick(); break;
            case Event::Kind::Demand: on_demand(ev.index); break;
            case Event::Kind::Arrival: on_arrival(ev.index); break;
            case Event::Kind::GrEmission: on_gr_emission(ev.index); break;
            case Event::Kind::Activate: on_activate(ev.index, ev.epoch); break;
            case Event::Kind::FrameArrival: on_frame_arrival(ev); break;
            case Event::Kind::Flood: on_flood(); break;
            case Event::Kind::Attack: on_attack(ev.index); break;
            case Event::Kind::MetricSample: on_metric_sample(); break;
        }
    }

    void finalize() {
        for (const LinkRt& L : links) {
            LinkMetrics m = L.met;
            m.key_bits_generated = L.store.total_deposited();
            m.key_bits_discarded_overflow = L.store.total_discarded();
            m.key_bits_available_end = L.store.available_bits();
            m.fill_fraction_end = L.store.fill_fraction();
            m.reserved_rate_end = L.reserved;
            m.seconds_down = L.seconds_down +
                             (L.status == LinkStatus::Down && L.down_since >= 0
                                  ? duration - L.down_since
                                  : 0.0);
            met.links[L.id] = m;
        }
        for (auto& [cid, cr] : circuits) {
            CircuitMetrics& cm = met.circuits.at(cid);
            cm.final_state = state_name(cr.vc.state);
            cm.final_path = path_names(cr.vc.path_nodes);
        }
    }
};

// ---- public surface -----------------------------------------------------

Simulation::Simulation(Scenario scenario, RunOptions opts)
    : impl_(std::make_unique<Impl>(std::move(scenario), opts)) {}

Simulation::~Simulation() = default;
Simulation::Simulation(Simulation&&) noexcept = default;
Simulation& Simulation::operator=(Simulation&&) noexcept = default;

void Simulation::run() { impl_->run(); }

const NetworkMetrics& Simulation::metrics() const { return impl_->met; }
const std::vector<std::string>& Simulation::trace_lines() const { return impl_->trace; }
const Scenario& Simulation::scenario() const { return impl_->sc; }

std::uint64_t Simulation::duplicate_block_refs() const { return impl_->dup_block_refs; }
std::uint64_t Simulation::fidelity_mismatches() const { return impl_->fidelity_bad; }
std::uint64_t Simulation::delivered_packets_total() const { return impl_->delivered_total; }
std::uint64_t Simulation::in_transit_plaintext_hits() const { return impl_->plaintext_hits; }

std::uint64_t Simulation::payload_digest(std::uint32_t circuit_id) const {
    auto it = impl_->circuits.find(circuit_id);
    return it == impl_->circuits.end() ? 0 : it->second.digest;
}

std::uint64_t Simulation::store_available_bits(const std::string& link_id) const {
    return impl_->links[impl_->link_index.at(link_id)].store.available_bits();
}

RoutingTable Simulation::node_routing_table(const std::string& node_id) const {
    const std::uint32_t n = impl_->node_index.at(node_id);
    return compute_routes(impl_->views[n], impl_->node_ids, impl_->stub, n,
                          impl_->sc.config.weights);
}

NetworkMetrics run_scenario(const Scenario& s, RunOptions opts) {
    Simulation sim(s, opts);
    sim.run();
    return sim.metrics();
}

}  // namespace qkdnet
