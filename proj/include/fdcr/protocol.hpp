#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fdcr/params.hpp"

/// Dual-threshold detection, the RTS1/RTS2 handshake and the per-node mode
/// machine. Everything here is a pure state transition; timing and
/// randomness live in the simulation kernel.
namespace fdcr::protocol {

/// Ordered by energy: Idle < PuWeak < PuStrong.
enum class DtdDecision { Idle, PuWeak, PuStrong };

enum class RtsKind { None, Rts1, Rts2 };

enum class Mode { CS, FDTS, FDTR };

enum class NodeId { SU1, SU2 };

enum class HandshakeOutcome { EnterFDTS, EnterFDTR, KeepSensing };

std::string_view to_string(DtdDecision d);
std::string_view to_string(RtsKind k);
std::string_view to_string(Mode m);
std::string_view to_string(NodeId n);
std::string_view to_string(HandshakeOutcome o);

/// Thrown on an event the current mode cannot accept.
class ProtocolError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct NodeState {
    NodeId node_id = NodeId::SU1;
    Mode mode = Mode::CS;
    /// RTS this node is sending in the current sensing slot (None if not).
    RtsKind pending_mode_vote = RtsKind::None;
    /// Most recent non-Idle DTD decision; empty until the PU is first seen.
    std::optional<DtdDecision> mode_memory;
    /// Offset of this node's frame grid from the start of the transmission mode.
    Tick frame_phase = 0;
    bool is_fdts_source = false;

    bool operator==(const NodeState&) const = default;
};

NodeState initial_node(NodeId id);

/// Energy and thresholds share one normalization.
DtdDecision dtd_classify(double energy, double eps0, double eps1);

/// RTS2 after a strong PU, RTS1 after a weak one, RTS1 on a cold start.
/// Throws ProtocolError when handed Idle as the memory.
RtsKind vote_from_history(std::optional<DtdDecision> last_nonidle_decision);

HandshakeOutcome resolve_handshake(RtsKind a, RtsKind b);

namespace event {
struct SenseSlotResult {
    DtdDecision decision;
};
struct FrameBoundary {};
struct NackReceived {};
struct UndecodeDetected {};
struct PeerRts {
    RtsKind kind;
};
}  // namespace event

using NodeEvent = std::variant<event::SenseSlotResult, event::FrameBoundary, event::NackReceived,
                               event::UndecodeDetected, event::PeerRts>;

std::string_view event_name(const NodeEvent& e);

enum class ActionKind { StartSensingSlot, SendRts, StartFrame, AbortTransmission, EmitNack };

std::string_view to_string(ActionKind a);

struct Action {
    ActionKind kind;
    RtsKind rts = RtsKind::None;  ///< meaningful for SendRts only

    bool operator==(const Action&) const = default;
};

struct Timing {
    /// Offset of SU2's frame grid behind SU1's in FDTR: T/2 asynchronous, 0 synchronous.
    Tick fdtr_stagger = 0;
};

struct StepResult {
    NodeState state;
    std::vector<Action> actions;
};

/// One deterministic transition. Throws ProtocolError for an event that is
/// illegal in the current mode and role.
StepResult step_node(const NodeState& state, const NodeEvent& ev, const Timing& timing);

/// Whether `ev` is accepted in `state` (without applying it).
bool is_legal(const NodeState& state, const NodeEvent& ev);

// ---------------------------------------------------------------------------
// Two-node composition. The kernel only ever talks to the nodes through these
// joint events, so exploring them covers everything the simulator can do.

struct PairState {
    NodeState su1 = initial_node(NodeId::SU1);
    NodeState su2 = initial_node(NodeId::SU2);

    bool operator==(const PairState&) const = default;
};

namespace joint {
/// End of a cooperative sensing slot (both nodes in CS).
struct SlotEnd {
    DtdDecision su1;
    DtdDecision su2;
};
/// End of an in-frame sensing slot at the FDTS source.
struct SourceSense {
    DtdDecision decision;
};
/// One or both transmit frames end at this instant. `decoded_at_X` is X's
/// verdict on the peer frame that just ended.
struct FramesEnded {
    bool su1_frame = false;
    bool su2_frame = false;
    bool decoded_at_su1 = true;
    bool decoded_at_su2 = true;
};
}  // namespace joint

using JointEvent = std::variant<joint::SlotEnd, joint::SourceSense, joint::FramesEnded>;

struct PairStep {
    PairState state;
    std::vector<Action> su1_actions;
    std::vector<Action> su2_actions;
    /// Set when an RTS exchange was resolved during this step.
    std::optional<HandshakeOutcome> handshake;
};

/// Applies a joint event. Throws ProtocolError if the event does not fit the
/// network mode or if the nodes end up in different modes.
PairStep step_pair(const PairState& state, const JointEvent& ev, const Timing& timing);

/// Network-wide mode; throws ProtocolError if the nodes disagree.
Mode pair_mode(const PairState& s);

bool is_transmit_action(ActionKind a);

/// Joint events the simulation kernel can emit while the pair is in mode `m`.
std::vector<JointEvent> kernel_events(Mode m);

std::string describe(const JointEvent& ev);
std::string describe(const NodeState& s);

struct Transition {
    PairState from;
    JointEvent event;
    PairStep step;
};

struct Exploration {
    std::vector<PairState> states;  ///< reachable from the initial pair, in BFS order
    std::vector<Transition> transitions;
    std::vector<std::string> violations;  ///< ProtocolError messages hit during the search
};

/// Breadth-first search over every pair state reachable from the initial
/// state under kernel_events.
Exploration explore_pair(const Timing& timing);

}  // namespace fdcr::protocol
