// Parameter search for a cost profile.
//
// Keeps the exit/entry pair fixed, then scales the guest-side costs until the
// native worst case hits its target and the host-side costs until the fully
// optimized virtualized worst case hits its target. Prints the profile JSON.

#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "rtvsim/machine.hpp"
#include "rtvsim/scenario_io.hpp"

using namespace rtvsim;

namespace {

Duration scaled(Duration d, double f) {
    return Duration{static_cast<std::uint64_t>(std::llround(static_cast<double>(d.ns) * f))};
}

// Smallest factor in [lo, hi] (step 0.001) whose worst case reaches `target`.
double search(const std::function<std::uint64_t(double)>& worst, std::uint64_t target, double lo, double hi) {
    auto a = static_cast<std::int64_t>(std::llround(lo * 1000));
    auto b = static_cast<std::int64_t>(std::llround(hi * 1000));
    while (a < b) {
        const auto mid = a + (b - a) / 2;
        if (worst(static_cast<double>(mid) / 1000.0) >= target)
            b = mid;
        else
            a = mid + 1;
    }
    // the step below may land closer
    const double f = static_cast<double>(a) / 1000.0;
    const double g = static_cast<double>(a - 1) / 1000.0;
    const auto wf = worst(f), wg = worst(g);
    const auto df = wf > target ? wf - target : target - wf;
    const auto dg = wg > target ? wg - target : target - wg;
    return dg < df ? g : f;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fit a cost profile to native and virtualized worst-case targets"};
    std::string scenario_file, prior_name = "phenom-2012";
    std::uint64_t native_target = 14000, virt_target = 25000;
    app.add_option("scenario", scenario_file, "Load scenario used for both runs")->required();
    app.add_option("--prior", prior_name, "Starting profile (name or file)");
    app.add_option("--native-target", native_target, "Native worst case, ns");
    app.add_option("--virt-target", virt_target, "Fully optimized virtualized worst case, ns");
    CLI11_PARSE(app, argc, argv);

    try {
        Scenario base = load_scenario(scenario_file);
        const CostModel prior = load_cost_profile(prior_name, std::filesystem::path(scenario_file).parent_path());
        base.vmm.injection_policy = InjectionPolicy::PrioritySorted;
        base.vmm.holdback_enabled = base.vmm.kernel_suppress_enabled = true;
        base.vmm.tpr_mask_enabled = base.vmm.deferred_timer_enabled = true;
        base.trace = false;

        auto guest_scaled = [&](double f) {
            CostModel c = prior;
            c.guest_irq_entry = scaled(prior.guest_irq_entry, f);
            c.guest_sched = scaled(prior.guest_sched, f);
            c.timer_program = scaled(prior.timer_program, f);
            return c;
        };
        double gf = search(
            [&](double f) {
                Scenario s = base;
                s.native = true;
                s.cost = guest_scaled(f);
                return simulate(s).histogram.max_ns();
            },
            native_target, 0.1, 5.0);
        const CostModel guest_fit = guest_scaled(gf);

        auto host_scaled = [&](double f) {
            CostModel c = guest_fit;
            c.world_switch = scaled(prior.world_switch, f);
            c.vmm_dispatch = scaled(prior.vmm_dispatch, f);
            c.injection = scaled(prior.injection, f);
            c.ipc = scaled(prior.ipc, f);
            return c;
        };
        double hf = search(
            [&](double f) {
                Scenario s = base;
                s.cost = host_scaled(f);
                return simulate(s).histogram.max_ns();
            },
            virt_target, 0.1, 10.0);
        CostModel fit = host_scaled(hf);
        fit.name = prior.name;

        Scenario n = base;
        n.native = true;
        n.cost = fit;
        Scenario v = base;
        v.cost = fit;
        const auto wn = simulate(n).histogram.max_ns();
        const auto wv = simulate(v).histogram.max_ns();
        std::fprintf(stderr, "guest factor %.3f, host factor %.3f: native worst %llu ns, virtualized worst %llu ns\n", gf, hf,
                     static_cast<unsigned long long>(wn), static_cast<unsigned long long>(wv));
        std::cout << cost_to_json(fit).dump(2) << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
