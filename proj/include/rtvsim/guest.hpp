#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "rtvsim/config.hpp"
#include "rtvsim/des.hpp"
#include "rtvsim/hypercall.hpp"
#include "rtvsim/metrics.hpp"

namespace rtvsim {

class Machine;

enum class TaskKind : std::uint8_t { RtPeriodic, Load, Idle };
enum class TaskState : std::uint8_t { Runnable, Sleeping, Running };

struct GuestTask {
    int id = 0;
    int priority = 0;
    TaskKind kind = TaskKind::Idle;
    TaskState state = TaskState::Runnable;

    // RtPeriodic
    Duration interval{};
    Duration body_cost{};
    Duration declared_wcet{};
    std::optional<std::uint64_t> loops;
    std::uint64_t activations = 0;
    std::deque<SimTime> backlog; // expected wakeups not yet started (overrun)
    SimTime expected{};
    SimTime actual_start{};
    bool body_started = false;

    // RtPeriodic body or Load work still to execute
    Duration remaining{};
};

struct GuestStats {
    std::uint64_t timer_virqs = 0;
    std::uint64_t device_virqs = 0;
    std::uint64_t expired_timers = 0;
    std::uint64_t rt_wakeups = 0;
    std::uint64_t program_requests = 0;
    std::uint64_t deferred = 0;
    std::uint64_t task_switches = 0;
};

/// PREEMPT_RT-style guest kernel.
///
/// Kernel work is a queue of steps executed with virtual interrupts disabled;
/// task work runs with them enabled. A VM exit pauses whatever chunk is in
/// flight and the guest continues where it stopped on the next entry.
class GuestKernel {
public:
    GuestKernel(Machine& m, GuestConfig cfg);

    int add_rt_task(const CyclictestSpec& spec);
    int add_load_task();
    void set_cache_penalty(Duration d);

    /// Initial programming of the first timeout, then the scheduler picks a task.
    void boot();

    /// VM entered (virtualized); `injected` becomes a pending virq first.
    void resume(std::optional<IrqVector> injected);
    /// Virq accepted while the guest does not execute (entry immediately preempted).
    void receive(IrqVector v);
    /// VM exit: stop executing and bank the remaining work of the current chunk.
    void pause();
    /// Native mode: hardware interrupt delivered straight to the kernel.
    void hw_irq(IrqVector v);

    bool executing() const { return executing_; }
    bool halted() const { return halted_; }
    /// Task work (RT body or load) is running: virtual interrupts are enabled.
    bool in_task_context() const { return executing_ && inflight_ && inflight_->task_work && inflight_->running; }
    bool deferred_reprogram() const { return deferred_reprogram_; }
    std::optional<SimTime> next_timeout() const;
    const std::vector<GuestTask>& tasks() const { return tasks_; }
    const GuestTask& task(int id) const { return tasks_.at(static_cast<std::size_t>(id)); }
    int running_task() const { return running_; }
    const GuestStats& stats() const { return stats_; }
    const GuestConfig& config() const { return cfg_; }

private:
    struct Step {
        Activity activity = Activity::GuestSched;
        Duration cost{};
        std::function<void()> after;
        std::optional<Hypercall> hypercall;
    };
    struct Inflight {
        Activity activity;
        Duration remaining;
        SimTime started;
        EventHandle handle;
        std::function<void()> after;
        bool task_work;
        bool running;
    };

    void step();
    void start_chunk(Activity a, Duration cost, std::function<void()> after, bool task_work);
    void start_inflight();
    void issue(Hypercall hc);
    void run_task();
    void halt();
    void on_virq(IrqVector v);
    void timer_irq_handler();
    void device_handler(IrqVector v);
    bool expire_due();
    void activate(GuestTask& t, SimTime deadline);
    void reprogram_if_needed();
    void retry_expiry();
    void rt_body_complete(GuestTask& t);
    void load_work_complete(GuestTask& t);
    void schedule();
    void pick_next();
    void prepend(Step s) { steps_.push_front(std::move(s)); }
    Step kernel_step(Activity a, std::function<void()> after = {});
    bool runnable(const GuestTask& t) const;
    bool deferral_active() const;

    Machine& m_;
    GuestConfig cfg_;
    std::vector<GuestTask> tasks_;
    int running_ = 0;
    std::multimap<SimTime, int> timer_wheel_;
    std::deque<Step> steps_;
    std::optional<Inflight> inflight_;
    std::set<std::uint8_t> pending_virqs_;
    std::optional<SimTime> programmed_;
    bool deferred_reprogram_ = false;
    bool executing_ = false;
    bool halted_ = false;
    GuestStats stats_;
};

} // namespace rtvsim
