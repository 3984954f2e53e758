#pragma once

#include <cstdint>
#include <string_view>

#include "rtvsim/hw.hpp"
#include "rtvsim/time.hpp"

namespace rtvsim {

/// Guest-initiated VM exit reasons.
struct Hypercall {
    enum class Kind : std::uint8_t {
        ProgramTimer,    // absolute `deadline`; `issued` is when the guest executed it
        Halt,            // idle task reached, nothing to run
        IrqWindow,       // guest re-enabled interrupts while the VMM has injectable vectors
        ExternalRequest, // virtual device access served by an external server
        RtComplete,      // end of a real-time job without a timer reprogram
        Unknown,
    };
    Kind kind = Kind::Unknown;
    SimTime deadline{};
    SimTime issued{};
    Duration service_latency{};
    std::int64_t code = 0;
};

std::string_view to_string(Hypercall::Kind k);

/// Something the kernel holds for the VMM until the VMM is current.
struct VmmItem {
    enum class Kind : std::uint8_t { Irq, Emergency, ExternalCompletion };
    Kind kind = Kind::Irq;
    IrqVector vector{};
    SimTime arrival{};
    std::uint64_t id = 0;
};

} // namespace rtvsim
