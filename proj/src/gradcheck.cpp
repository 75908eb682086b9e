#include "lgan/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "lgan/errors.hpp"
#include "lgan/graph.hpp"
#include "lgan/mask_codec.hpp"
#include "lgan/networks.hpp"
#include "lgan/objectives.hpp"
#include "lgan/rng.hpp"

namespace lgan {

namespace {

constexpr double kEps = 1e-3;
constexpr double kTol32 = 1e-3;
constexpr double kTol64 = 1e-6;

template <typename T>
TensorT<T> random_tensor(std::vector<int> shape, RngState& rng, double lo, double hi) {
    TensorT<T> t(std::move(shape));
    for (auto& v : t.data) v = static_cast<T>(lo + (hi - lo) * rng.next_double());
    return t;
}

// Values bounded away from zero so kinked ops (relu family, |.|) see no sign
// flip within the finite-difference step.
template <typename T>
TensorT<T> random_signed_tensor(std::vector<int> shape, RngState& rng) {
    TensorT<T> t(std::move(shape));
    for (auto& v : t.data) {
        const double mag = 0.2 + 0.8 * rng.next_double();
        v = static_cast<T>(rng.next_float() < 0.5f ? -mag : mag);
    }
    return t;
}

template <typename T>
struct FdCase {
    std::string name;
    std::vector<TensorT<T>> inputs;
    std::vector<bool> checked; // which inputs get finite-difference treatment
    // Builds the scalar root from leaves matching `inputs`.
    std::function<NodeId(GraphT<T>&, const std::vector<NodeId>&)> build;
};

// Roots are sum(op_output * fixed_random_projection) so every output element
// carries a distinct weight.
template <typename T>
NodeId project_sum(GraphT<T>& g, NodeId out, const TensorT<T>& proj) {
    return g.sum_all(g.mul(out, g.leaf(proj)));
}

template <typename T>
std::vector<FdCase<T>> make_cases() {
    std::vector<FdCase<T>> cases;

    { // conv2d, stride 1, no pad
        RngState rng(101);
        FdCase<T> c;
        c.name = "conv2d";
        c.inputs = {random_tensor<T>({1, 2, 5, 5}, rng, -1, 1),
                    random_tensor<T>({3, 2, 3, 3}, rng, -1, 1),
                    random_tensor<T>({3}, rng, -0.5, 0.5)};
        c.checked = {true, true, true};
        TensorT<T> proj = random_tensor<T>({1, 3, 3, 3}, rng, -1, 1);
        c.build = [proj](GraphT<T>& g, const std::vector<NodeId>& in) {
            return project_sum(g, g.conv2d(in[0], in[1], in[2], 1, 0), proj);
        };
        cases.push_back(std::move(c));
    }
    { // conv2d, stride 2, pad 1, 4x4 kernel (the network's shape)
        RngState rng(102);
        FdCase<T> c;
        c.name = "conv2d_s2";
        c.inputs = {random_tensor<T>({2, 3, 6, 6}, rng, -1, 1),
                    random_tensor<T>({4, 3, 4, 4}, rng, -1, 1),
                    random_tensor<T>({4}, rng, -0.5, 0.5)};
        c.checked = {true, true, true};
        TensorT<T> proj = random_tensor<T>({2, 4, 3, 3}, rng, -1, 1);
        c.build = [proj](GraphT<T>& g, const std::vector<NodeId>& in) {
            return project_sum(g, g.conv2d(in[0], in[1], in[2], 2, 1), proj);
        };
        cases.push_back(std::move(c));
    }
    { // conv_transpose2d, stride 2, pad 1
        RngState rng(103);
        FdCase<T> c;
        c.name = "conv_transpose2d";
        c.inputs = {random_tensor<T>({1, 3, 3, 3}, rng, -1, 1),
                    random_tensor<T>({3, 2, 4, 4}, rng, -1, 1),
                    random_tensor<T>({2}, rng, -0.5, 0.5)};
        c.checked = {true, true, true};
        TensorT<T> proj = random_tensor<T>({1, 2, 6, 6}, rng, -1, 1);
        c.build = [proj](GraphT<T>& g, const std::vector<NodeId>& in) {
            return project_sum(g, g.conv_transpose2d(in[0], in[1], in[2], 2, 1), proj);
        };
        cases.push_back(std::move(c));
    }
    { // batch_norm2d
        RngState rng(104);
        FdCase<T> c;
        c.name = "batch_norm2d";
        c.inputs = {random_tensor<T>({2, 3, 4, 4}, rng, -2, 2),
                    random_tensor<T>({3}, rng, 0.5, 1.5),
                    random_tensor<T>({3}, rng, -0.5, 0.5)};
        c.checked = {true, true, true};
        TensorT<T> proj = random_tensor<T>({2, 3, 4, 4}, rng, -1, 1);
        c.build = [proj](GraphT<T>& g, const std::vector<NodeId>& in) {
            return project_sum(g, g.batch_norm2d(in[0], in[1], in[2], T(1e-5)), proj);
        };
        cases.push_back(std::move(c));
    }

    const std::vector<std::pair<std::string, Act>> acts = {
        {"leaky_relu", Act::LeakyRelu}, {"relu", Act::Relu}, {"tanh", Act::Tanh},
        {"sigmoid", Act::Sigmoid}};
    for (const auto& [name, kind] : acts) {
        RngState rng(200 + static_cast<std::uint64_t>(kind));
        FdCase<T> c;
        c.name = name;
        c.inputs = {random_signed_tensor<T>({20}, rng)};
        c.checked = {true};
        TensorT<T> proj = random_tensor<T>({20}, rng, -1, 1);
        const Act k = kind;
        c.build = [proj, k](GraphT<T>& g, const std::vector<NodeId>& in) {
            return project_sum(g, g.activation(in[0], k, T(0.2)), proj);
        };
        cases.push_back(std::move(c));
    }

    { // dropout: fixed rng per build makes the op a deterministic function
        RngState rng(300);
        FdCase<T> c;
        c.name = "dropout";
        c.inputs = {random_signed_tensor<T>({4, 8}, rng)};
        c.checked = {true};
        TensorT<T> proj = random_tensor<T>({4, 8}, rng, -1, 1);
        c.build = [proj](GraphT<T>& g, const std::vector<NodeId>& in) {
            RngState local(777);
            return project_sum(g, g.dropout(in[0], 0.5f, local), proj);
        };
        cases.push_back(std::move(c));
    }
    { // concat_channels routes slices of the upstream gradient to each input
        RngState rng(301);
        FdCase<T> c;
        c.name = "concat_channels";
        c.inputs = {random_tensor<T>({1, 2, 3, 3}, rng, -1, 1),
                    random_tensor<T>({1, 3, 3, 3}, rng, -1, 1)};
        c.checked = {true, true};
        TensorT<T> proj = random_tensor<T>({1, 5, 3, 3}, rng, -1, 1);
        c.build = [proj](GraphT<T>& g, const std::vector<NodeId>& in) {
            return project_sum(g, g.concat_channels(in[0], in[1]), proj);
        };
        cases.push_back(std::move(c));
    }
    { // add / mul / scale / sum_all composed into one expression
        RngState rng(302);
        FdCase<T> c;
        c.name = "add";
        c.inputs = {random_tensor<T>({6}, rng, -1, 1), random_tensor<T>({6}, rng, -1, 1)};
        c.checked = {true, true};
        TensorT<T> proj = random_tensor<T>({6}, rng, -1, 1);
        c.build = [proj](GraphT<T>& g, const std::vector<NodeId>& in) {
            return project_sum(g, g.add(in[0], in[1]), proj);
        };
        cases.push_back(std::move(c));
    }
    {
        RngState rng(303);
        FdCase<T> c;
        c.name = "mul";
        c.inputs = {random_tensor<T>({6}, rng, -1, 1), random_tensor<T>({6}, rng, -1, 1)};
        c.checked = {true, true};
        TensorT<T> proj = random_tensor<T>({6}, rng, -1, 1);
        c.build = [proj](GraphT<T>& g, const std::vector<NodeId>& in) {
            return project_sum(g, g.mul(in[0], in[1]), proj);
        };
        cases.push_back(std::move(c));
    }
    {
        RngState rng(304);
        FdCase<T> c;
        c.name = "scale";
        c.inputs = {random_tensor<T>({6}, rng, -1, 1)};
        c.checked = {true};
        TensorT<T> proj = random_tensor<T>({6}, rng, -1, 1);
        c.build = [proj](GraphT<T>& g, const std::vector<NodeId>& in) {
            return project_sum(g, g.scale(in[0], T(2.5)), proj);
        };
        cases.push_back(std::move(c));
    }
    {
        RngState rng(305);
        FdCase<T> c;
        c.name = "sum_all";
        c.inputs = {random_tensor<T>({3, 4}, rng, -1, 1)};
        c.checked = {true};
        c.build = [](GraphT<T>& g, const std::vector<NodeId>& in) { return g.sum_all(in[0]); };
        cases.push_back(std::move(c));
    }
    { // stable bce against both labels
        RngState rng(306);
        FdCase<T> c;
        c.name = "bce_with_logits";
        c.inputs = {random_tensor<T>({1, 1, 4, 4}, rng, -3, 3)};
        c.checked = {true};
        c.build = [](GraphT<T>& g, const std::vector<NodeId>& in) {
            return g.add(g.bce_with_logits(in[0], T(1)), g.bce_with_logits(in[0], T(0)));
        };
        cases.push_back(std::move(c));
    }
    { // l1 with inputs kept apart so |.| stays smooth across the fd step
        RngState rng(307);
        FdCase<T> c;
        c.name = "l1_loss";
        TensorT<T> a = random_tensor<T>({2, 3, 3}, rng, -1, 1);
        TensorT<T> b = a;
        for (auto& v : b.data)
            v += static_cast<T>(rng.next_float() < 0.5f ? -0.3 - 0.4 * rng.next_double()
                                                        : 0.3 + 0.4 * rng.next_double());
        c.inputs = {std::move(a), std::move(b)};
        c.checked = {true, true};
        c.build = [](GraphT<T>& g, const std::vector<NodeId>& in) {
            return g.l1_loss(in[0], in[1]);
        };
        cases.push_back(std::move(c));
    }
    { // Eq. 1 realization: 0.5*(bce(real,1) + bce(fake,0))
        RngState rng(308);
        FdCase<T> c;
        c.name = "loss_discriminator";
        c.inputs = {random_tensor<T>({1, 1, 4, 4}, rng, -2, 2),
                    random_tensor<T>({1, 1, 4, 4}, rng, -2, 2)};
        c.checked = {true, true};
        c.build = [](GraphT<T>& g, const std::vector<NodeId>& in) {
            const NodeId real_term = g.bce_with_logits(in[0], T(1));
            const NodeId fake_term = g.bce_with_logits(in[1], T(0));
            return g.scale(g.add(real_term, fake_term), T(0.5));
        };
        cases.push_back(std::move(c));
    }
    { // Eq. 3 realization: bce(fake,1) + lambda * l1(g_out, target)
        RngState rng(309);
        FdCase<T> c;
        c.name = "loss_generator";
        TensorT<T> g_out = random_tensor<T>({1, 6, 3, 3}, rng, -0.9, 0.9);
        TensorT<T> target(g_out.shape);
        for (auto& v : target.data) v = rng.next_float() < 0.5f ? T(-1) : T(1);
        c.inputs = {random_tensor<T>({1, 1, 3, 3}, rng, -2, 2), std::move(g_out), std::move(target)};
        c.checked = {true, true, false}; // targets are +-1 constants
        c.build = [](GraphT<T>& g, const std::vector<NodeId>& in) {
            const NodeId adv = g.bce_with_logits(in[0], T(1));
            const NodeId l1 = g.l1_loss(in[1], in[2]);
            return g.add(adv, g.scale(l1, T(100)));
        };
        cases.push_back(std::move(c));
    }
    return cases;
}

template <typename T>
double check_case(const FdCase<T>& c, bool mutate) {
    // Analytic pass.
    GraphT<T> g;
    std::vector<NodeId> leaves;
    for (const auto& t : c.inputs) leaves.push_back(g.leaf(t));
    const NodeId root = c.build(g, leaves);
    g.backward(root);

    std::vector<TensorT<T>> analytic;
    for (std::size_t i = 0; i < leaves.size(); ++i) analytic.push_back(g.grad(leaves[i]));
    if (mutate)
        for (auto& a : analytic)
            if (a.numel() > 0) a[0] += T(0.25) * (T(1) + std::abs(a[0]));

    auto eval = [&](const std::vector<TensorT<T>>& inputs) {
        GraphT<T> gg;
        std::vector<NodeId> ll;
        for (const auto& t : inputs) ll.push_back(gg.leaf(t));
        return static_cast<double>(gg.value(c.build(gg, ll))[0]);
    };

    double max_rel = 0.0;
    for (std::size_t i = 0; i < c.inputs.size(); ++i) {
        if (!c.checked[i]) continue;
        for (std::size_t j = 0; j < c.inputs[i].numel(); ++j) {
            std::vector<TensorT<T>> probe = c.inputs;
            const T orig = probe[i][j];
            probe[i][j] = orig + static_cast<T>(kEps);
            const double fp = eval(probe);
            probe[i][j] = orig - static_cast<T>(kEps);
            const double fm = eval(probe);
            const double fd = (fp - fm) / (2.0 * kEps);
            const double an = static_cast<double>(analytic[i][j]);
            const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1.0});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

// Full generator + L1 objective, float only, probed at a few parameter
// coordinates spread across layers.
GradCheckResult check_generator_composite(bool mutate) {
    NetConfig netcfg;
    netcfg.image_size = 32;
    netcfg.base_width = 8;
    const Generator gen(netcfg);

    ParamStore params;
    gen.register_params(params);
    RngState init_rng(42);
    init_params(params, init_rng);

    RngState data_rng(43);
    Tensor x = random_tensor<float>({1, 3, 32, 32}, data_rng, -1, 1);
    Tensor y({1, 6, 32, 32});
    for (auto& v : y.data) v = data_rng.next_float() < 0.5f ? -1.0f : 1.0f;

    auto loss_value = [&](const ParamStore& ps, float* grad_out, const std::string& pick_name,
                          std::size_t pick_idx) -> double {
        Graph g;
        const NodeId xn = g.leaf(x);
        const NodeId yn = g.leaf(y);
        const BoundParams bp = bind_params(g, ps, "g.");
        RngState drop(99);
        const NodeId out = gen.forward(g, xn, bp, drop);
        const NodeId loss = g.l1_loss(out, yn);
        if (grad_out) {
            g.backward(loss);
            *grad_out = g.grad(bp.at(pick_name))[pick_idx];
        }
        return static_cast<double>(g.value(loss)[0]);
    };

    // One coordinate from five layers across the net.
    const std::vector<std::string> names = params.names_with_prefix("g.");
    std::vector<std::pair<std::string, std::size_t>> picks;
    RngState pick_rng(7);
    for (std::size_t k = 0; k < 5; ++k) {
        const std::string& name = names[(k * 7) % names.size()];
        picks.emplace_back(name, static_cast<std::size_t>(pick_rng.below(params.at(name).numel())));
    }

    double max_rel = 0.0;
    for (const auto& [name, idx] : picks) {
        float an = 0.0f;
        loss_value(params, &an, name, idx);
        if (mutate) an += 0.25f * (1.0f + std::abs(an));

        ParamStore probe = params;
        const float orig = probe.at(name)[idx];
        probe.at(name)[idx] = orig + static_cast<float>(kEps);
        const double fp = loss_value(probe, nullptr, name, idx);
        probe.at(name)[idx] = orig - static_cast<float>(kEps);
        const double fm = loss_value(probe, nullptr, name, idx);
        const double fd = (fp - fm) / (2.0 * kEps);
        const double rel =
            std::abs(fd - static_cast<double>(an)) / std::max({std::abs(fd), std::abs(static_cast<double>(an)), 1.0});
        max_rel = std::max(max_rel, rel);
    }

    GradCheckResult r;
    r.op = "generator_composite";
    r.mode = "32-bit";
    r.max_rel_err = max_rel;
    r.tolerance = 1e-2;
    r.pass = max_rel < r.tolerance;
    return r;
}

} // namespace

std::vector<std::string> gradcheck_op_names() {
    std::vector<std::string> names;
    for (const auto& c : make_cases<double>()) names.push_back(c.name);
    names.push_back("generator_composite");
    return names;
}

std::vector<GradCheckResult> run_gradchecks(const std::vector<std::string>& ops, bool mutate) {
    const auto known = gradcheck_op_names();
    for (const auto& op : ops)
        if (std::find(known.begin(), known.end(), op) == known.end())
            throw ConfigError("unknown gradcheck op '" + op + "'");

    auto wanted = [&](const std::string& name) {
        return ops.empty() || std::find(ops.begin(), ops.end(), name) != ops.end();
    };

    std::vector<GradCheckResult> results;
    const auto cases32 = make_cases<float>();
    const auto cases64 = make_cases<double>();
    for (std::size_t i = 0; i < cases32.size(); ++i) {
        if (!wanted(cases32[i].name)) continue;
        GradCheckResult r32;
        r32.op = cases32[i].name;
        r32.mode = "32-bit";
        r32.max_rel_err = check_case(cases32[i], mutate);
        r32.tolerance = kTol32;
        r32.pass = r32.max_rel_err < kTol32;
        results.push_back(r32);

        GradCheckResult r64;
        r64.op = cases64[i].name;
        r64.mode = "64-bit";
        r64.max_rel_err = check_case(cases64[i], mutate);
        r64.tolerance = kTol64;
        r64.pass = r64.max_rel_err < kTol64;
        results.push_back(r64);
    }
    if (wanted("generator_composite")) results.push_back(check_generator_composite(mutate));
    return results;
}

std::string gradcheck_table(const std::vector<GradCheckResult>& results) {
    std::ostringstream os;
    os << "op                     mode    max rel err   tolerance  result\n";
    os << "---------------------  ------  ------------  ---------  ------\n";
    for (const auto& r : results) {
        char line[128];
        std::snprintf(line, sizeof(line), "%-21s  %-6s  %12.3e  %9.0e  %s\n", r.op.c_str(),
                      r.mode.c_str(), r.max_rel_err, r.tolerance, r.pass ? "pass" : "FAIL");
        os << line;
    }
    return os.str();
}

} // namespace lgan
