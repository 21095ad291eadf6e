#include "fdcr/protocol.hpp"

#include <algorithm>

namespace fdcr::protocol {

std::string_view to_string(DtdDecision d)
{
    switch (d) {
    case DtdDecision::Idle: return "Idle";
    case DtdDecision::PuWeak: return "PuWeak";
    case DtdDecision::PuStrong: return "PuStrong";
    }
    return "?";
}

std::string_view to_string(RtsKind k)
{
    switch (k) {
    case RtsKind::None: return "None";
    case RtsKind::Rts1: return "RTS1";
    case RtsKind::Rts2: return "RTS2";
    }
    return "?";
}

std::string_view to_string(Mode m)
{
    switch (m) {
    case Mode::CS: return "CS";
    case Mode::FDTS: return "FDTS";
    case Mode::FDTR: return "FDTR";
    }
    return "?";
}

std::string_view to_string(NodeId n)
{
    return n == NodeId::SU1 ? "SU1" : "SU2";
}

std::string_view to_string(HandshakeOutcome o)
{
    switch (o) {
    case HandshakeOutcome::EnterFDTS: return "EnterFDTS";
    case HandshakeOutcome::EnterFDTR: return "EnterFDTR";
    case HandshakeOutcome::KeepSensing: return "KeepSensing";
    }
    return "?";
}

std::string_view to_string(ActionKind a)
{
    switch (a) {
    case ActionKind::StartSensingSlot: return "StartSensingSlot";
    case ActionKind::SendRts: return "SendRts";
    case ActionKind::StartFrame: return "StartFrame";
    case ActionKind::AbortTransmission: return "AbortTransmission";
    case ActionKind::EmitNack: return "EmitNack";
    }
    return "?";
}

std::string_view event_name(const NodeEvent& e)
{
    struct Visitor {
        std::string_view operator()(const event::SenseSlotResult&) const { return "SenseSlotResult"; }
        std::string_view operator()(const event::FrameBoundary&) const { return "FrameBoundary"; }
        std::string_view operator()(const event::NackReceived&) const { return "NackReceived"; }
        std::string_view operator()(const event::UndecodeDetected&) const { return "UndecodeDetected"; }
        std::string_view operator()(const event::PeerRts&) const { return "PeerRts"; }
    };
    return std::visit(Visitor{}, e);
}

NodeState initial_node(NodeId id)
{
    NodeState s;
    s.node_id = id;
    return s;
}

DtdDecision dtd_classify(double energy, double eps0, double eps1)
{
    if (energy > eps1) {
        return DtdDecision::PuStrong;
    }
    if (energy > eps0) {
        return DtdDecision::PuWeak;
    }
    return DtdDecision::Idle;
}

RtsKind vote_from_history(std::optional<DtdDecision> last_nonidle_decision)
{
    if (!last_nonidle_decision) {
        return RtsKind::Rts1;
    }
    switch (*last_nonidle_decision) {
    case DtdDecision::PuStrong: return RtsKind::Rts2;
    case DtdDecision::PuWeak: return RtsKind::Rts1;
    case DtdDecision::Idle: break;
    }
    throw ProtocolError("vote_from_history: mode memory must hold a non-Idle decision");
}

HandshakeOutcome resolve_handshake(RtsKind a, RtsKind b)
{
    if (a == RtsKind::None || b == RtsKind::None) {
        return HandshakeOutcome::KeepSensing;
    }
    if (a == RtsKind::Rts2 || b == RtsKind::Rts2) {
        return HandshakeOutcome::EnterFDTR;
    }
    return HandshakeOutcome::EnterFDTS;
}

bool is_transmit_action(ActionKind a)
{
    return a == ActionKind::StartFrame;
}

namespace {

enum class Role { Sensing, Fdtr, FdtsSource, FdtsDestination };

Role role_of(const NodeState& s)
{
    switch (s.mode) {
    case Mode::CS: return Role::Sensing;
    case Mode::FDTR: return Role::Fdtr;
    case Mode::FDTS: return s.is_fdts_source ? Role::FdtsSource : Role::FdtsDestination;
    }
    return Role::Sensing;
}

NodeState back_to_sensing(NodeState s)
{
    s.mode = Mode::CS;
    s.pending_mode_vote = RtsKind::None;
    s.is_fdts_source = false;
    s.frame_phase = 0;
    return s;
}

[[noreturn]] void illegal(const NodeState& s, const NodeEvent& ev)
{
    std::string role = std::string(to_string(s.mode));
    if (s.mode == Mode::FDTS) {
        role += s.is_fdts_source ? "/source" : "/destination";
    }
    throw ProtocolError(std::string(to_string(s.node_id)) + ": event " + std::string(event_name(ev)) +
                        " is illegal in mode " + role);
}

}  // namespace

bool is_legal(const NodeState& state, const NodeEvent& ev)
{
    const Role role = role_of(state);
    return std::visit(
        [role](const auto& e) -> bool {
            using E = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<E, event::SenseSlotResult>) {
                return role == Role::Sensing || role == Role::FdtsSource;
            } else if constexpr (std::is_same_v<E, event::PeerRts>) {
                return role == Role::Sensing;
            } else if constexpr (std::is_same_v<E, event::FrameBoundary>) {
                return role == Role::Fdtr || role == Role::FdtsSource;
            } else if constexpr (std::is_same_v<E, event::NackReceived>) {
                return role != Role::Sensing;
            } else {
                return role == Role::Fdtr || role == Role::FdtsDestination;
            }
        },
        ev);
}

StepResult step_node(const NodeState& state, const NodeEvent& ev, const Timing& timing)
{
    if (!is_legal(state, ev)) {
        illegal(state, ev);
    }
    StepResult out{state, {}};
    NodeState& s = out.state;
    auto& actions = out.actions;
    const Role role = role_of(state);

    if (const auto* sense = std::get_if<event::SenseSlotResult>(&ev)) {
        if (role == Role::FdtsSource) {
            if (sense->decision == DtdDecision::Idle) {
                return out;
            }
            s = back_to_sensing(s);
            s.mode_memory = sense->decision;
            actions = {{ActionKind::EmitNack}, {ActionKind::AbortTransmission}, {ActionKind::StartSensingSlot}};
            return out;
        }
        if (sense->decision == DtdDecision::Idle) {
            s.pending_mode_vote = vote_from_history(s.mode_memory);
            actions = {{ActionKind::SendRts, s.pending_mode_vote}, {ActionKind::StartSensingSlot}};
        } else {
            s.mode_memory = sense->decision;
            s.pending_mode_vote = RtsKind::None;
            actions = {{ActionKind::StartSensingSlot}};
        }
        return out;
    }

    if (const auto* rts = std::get_if<event::PeerRts>(&ev)) {
        switch (resolve_handshake(s.pending_mode_vote, rts->kind)) {
        case HandshakeOutcome::EnterFDTR:
            s.mode = Mode::FDTR;
            s.pending_mode_vote = RtsKind::None;
            s.frame_phase = s.node_id == NodeId::SU1 ? 0 : timing.fdtr_stagger;
            actions = {{ActionKind::StartFrame}};
            break;
        case HandshakeOutcome::EnterFDTS:
            s.mode = Mode::FDTS;
            s.pending_mode_vote = RtsKind::None;
            s.frame_phase = 0;
            s.is_fdts_source = s.node_id == NodeId::SU1;
            if (s.is_fdts_source) {
                actions = {{ActionKind::StartFrame}};
            }
            break;
        case HandshakeOutcome::KeepSensing:
            s.pending_mode_vote = RtsKind::None;
            break;
        }
        return out;
    }

    if (std::holds_alternative<event::FrameBoundary>(ev)) {
        actions = {{ActionKind::StartFrame}};
        return out;
    }

    if (std::holds_alternative<event::NackReceived>(ev)) {
        const bool transmitting = role == Role::Fdtr || role == Role::FdtsSource;
        s = back_to_sensing(s);
        if (transmitting) {
            actions.push_back({ActionKind::AbortTransmission});
        }
        actions.push_back({ActionKind::StartSensingSlot});
        return out;
    }

    // UndecodeDetected
    const bool transmitting = role == Role::Fdtr;
    s = back_to_sensing(s);
    actions.push_back({ActionKind::EmitNack});
    if (transmitting) {
        actions.push_back({ActionKind::AbortTransmission});
    }
    actions.push_back({ActionKind::StartSensingSlot});
    return out;
}

Mode pair_mode(const PairState& s)
{
    if (s.su1.mode != s.su2.mode) {
        throw ProtocolError("network mode split: SU1 in " + std::string(to_string(s.su1.mode)) + ", SU2 in " +
                            std::string(to_string(s.su2.mode)));
    }
    return s.su1.mode;
}

namespace {

void apply(NodeState& node, std::vector<Action>& sink, const NodeEvent& ev, const Timing& timing)
{
    StepResult r = step_node(node, ev, timing);
    node = r.state;
    sink.insert(sink.end(), r.actions.begin(), r.actions.end());
}

}  // namespace

PairStep step_pair(const PairState& state, const JointEvent& ev, const Timing& timing)
{
    PairStep out{state, {}, {}, std::nullopt};
    NodeState& su1 = out.state.su1;
    NodeState& su2 = out.state.su2;
    const Mode mode = pair_mode(state);

    if (const auto* slot = std::get_if<joint::SlotEnd>(&ev)) {
        if (mode != Mode::CS) {
            throw ProtocolError("SlotEnd outside CS");
        }
        if (su1.pending_mode_vote != RtsKind::None || su2.pending_mode_vote != RtsKind::None) {
            const RtsKind v1 = su1.pending_mode_vote;
            const RtsKind v2 = su2.pending_mode_vote;
            out.handshake = resolve_handshake(v1, v2);
            apply(su1, out.su1_actions, event::PeerRts{v2}, timing);
            apply(su2, out.su2_actions, event::PeerRts{v1}, timing);
            if (*out.handshake != HandshakeOutcome::KeepSensing) {
                pair_mode(out.state);
                return out;
            }
        }
        apply(su1, out.su1_actions, event::SenseSlotResult{slot->su1}, timing);
        apply(su2, out.su2_actions, event::SenseSlotResult{slot->su2}, timing);
    } else if (const auto* sense = std::get_if<joint::SourceSense>(&ev)) {
        if (mode != Mode::FDTS) {
            throw ProtocolError("SourceSense outside FDTS");
        }
        NodeState& src = su1.is_fdts_source ? su1 : su2;
        NodeState& dst = su1.is_fdts_source ? su2 : su1;
        auto& src_actions = su1.is_fdts_source ? out.su1_actions : out.su2_actions;
        auto& dst_actions = su1.is_fdts_source ? out.su2_actions : out.su1_actions;
        apply(src, src_actions, event::SenseSlotResult{sense->decision}, timing);
        if (src.mode == Mode::CS) {
            apply(dst, dst_actions, event::NackReceived{}, timing);
        }
    } else {
        const auto& fe = std::get<joint::FramesEnded>(ev);
        if (mode == Mode::CS) {
            throw ProtocolError("FramesEnded in CS");
        }
        if (!fe.su1_frame && !fe.su2_frame) {
            throw ProtocolError("FramesEnded without any frame");
        }
        if (fe.su1_frame) {
            apply(su1, out.su1_actions, event::FrameBoundary{}, timing);
        }
        if (fe.su2_frame) {
            apply(su2, out.su2_actions, event::FrameBoundary{}, timing);
        }
        // su2 judges su1's frame and vice versa.
        const bool fail_at_su2 = fe.su1_frame && !fe.decoded_at_su2;
        const bool fail_at_su1 = fe.su2_frame && !fe.decoded_at_su1;
        if (fail_at_su1 || fail_at_su2) {
            if (fail_at_su1) {
                apply(su1, out.su1_actions, event::UndecodeDetected{}, timing);
            }
            if (fail_at_su2) {
                apply(su2, out.su2_actions, event::UndecodeDetected{}, timing);
            }
            if (su1.mode != Mode::CS) {
                apply(su1, out.su1_actions, event::NackReceived{}, timing);
            }
            if (su2.mode != Mode::CS) {
                apply(su2, out.su2_actions, event::NackReceived{}, timing);
            }
        }
    }
    pair_mode(out.state);
    return out;
}

}  // namespace fdcr::protocol

namespace fdcr::protocol {

std::vector<JointEvent> kernel_events(Mode m)
{
    constexpr DtdDecision kAll[] = {DtdDecision::Idle, DtdDecision::PuWeak, DtdDecision::PuStrong};
    std::vector<JointEvent> out;
    switch (m) {
    case Mode::CS:
        for (DtdDecision a : kAll) {
            for (DtdDecision b : kAll) {
                out.push_back(joint::SlotEnd{a, b});
            }
        }
        break;
    case Mode::FDTS:
        for (DtdDecision a : kAll) {
            out.push_back(joint::SourceSense{a});
        }
        out.push_back(joint::FramesEnded{true, false, true, true});
        out.push_back(joint::FramesEnded{true, false, true, false});
        break;
    case Mode::FDTR:
        for (int frames = 1; frames <= 3; ++frames) {
            for (int ok = 0; ok < 4; ++ok) {
                joint::FramesEnded fe{(frames & 1) != 0, (frames & 2) != 0, (ok & 1) != 0, (ok & 2) != 0};
                // A verdict only exists for a frame that ended.
                if ((!fe.su2_frame && !fe.decoded_at_su1) || (!fe.su1_frame && !fe.decoded_at_su2)) {
                    continue;
                }
                out.push_back(fe);
            }
        }
        break;
    }
    return out;
}

std::string describe(const JointEvent& ev)
{
    if (const auto* s = std::get_if<joint::SlotEnd>(&ev)) {
        return "SlotEnd(" + std::string(to_string(s->su1)) + "," + std::string(to_string(s->su2)) + ")";
    }
    if (const auto* s = std::get_if<joint::SourceSense>(&ev)) {
        return "SourceSense(" + std::string(to_string(s->decision)) + ")";
    }
    const auto& fe = std::get<joint::FramesEnded>(ev);
    std::string out = "FramesEnded(";
    out += fe.su1_frame ? std::string("su1:") + (fe.decoded_at_su2 ? "ok" : "fail") : "";
    out += fe.su1_frame && fe.su2_frame ? "," : "";
    out += fe.su2_frame ? std::string("su2:") + (fe.decoded_at_su1 ? "ok" : "fail") : "";
    return out + ")";
}

std::string describe(const NodeState& s)
{
    std::string out = std::string(to_string(s.mode));
    if (s.mode == Mode::FDTS) {
        out += s.is_fdts_source ? "/src" : "/dst";
    }
    out += " rts=" + std::string(to_string(s.pending_mode_vote));
    out += " mem=" + std::string(s.mode_memory ? to_string(*s.mode_memory) : "none");
    out += " phase=" + std::to_string(s.frame_phase);
    return out;
}

Exploration explore_pair(const Timing& timing)
{
    Exploration ex;
    ex.states.push_back(PairState{});
    for (std::size_t i = 0; i < ex.states.size(); ++i) {
        const PairState from = ex.states[i];
        Mode m;
        try {
            m = pair_mode(from);
        } catch (const ProtocolError& e) {
            ex.violations.emplace_back(e.what());
            continue;
        }
        for (const JointEvent& ev : kernel_events(m)) {
            try {
                PairStep step = step_pair(from, ev, timing);
                if (std::find(ex.states.begin(), ex.states.end(), step.state) == ex.states.end()) {
                    ex.states.push_back(step.state);
                }
                ex.transitions.push_back({from, ev, std::move(step)});
            } catch (const ProtocolError& e) {
                ex.violations.push_back(describe(from.su1) + " | " + describe(from.su2) + " on " + describe(ev) +
                                        ": " + e.what());
            }
        }
    }
    return ex;
}

}  // namespace fdcr::protocol
