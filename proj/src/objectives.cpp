#include "lgan/objectives.hpp"

#include <cmath>
#include <fstream>

#include "lgan/errors.hpp"
#include "lgan/numeric.hpp"

#include <json.hpp>

namespace lgan {

void TrainConfig::validate() const {
    if (lambda_l1 < 0) throw ConfigError("lambda_l1 must be >= 0");
    if (!(lr > 0)) throw ConfigError("lr must be > 0");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
        throw ConfigError("adam betas must lie in [0,1)");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (disc_loss_weight < 0) throw ConfigError("disc_loss_weight must be >= 0");
}

AdamState AdamState::init(const ParamStore& store, const std::string& prefix) {
    AdamState s;
    s.names = store.names_with_prefix(prefix);
    for (const auto& name : s.names) {
        s.m.emplace(name, Tensor(store.at(name).shape));
        s.v.emplace(name, Tensor(store.at(name).shape));
    }
    return s;
}

NodeId bce_with_logits(Graph& g, NodeId scores, float target) {
    return g.bce_with_logits(scores, target);
}

NodeId loss_discriminator(Graph& g, NodeId d_real, NodeId d_fake, float weight) {
    if (!g.value(d_real).same_shape(g.value(d_fake)))
        throw ShapeError("loss_discriminator: score shape mismatch " +
                         g.value(d_real).shape_str() + " vs " + g.value(d_fake).shape_str());
    const NodeId real_term = g.bce_with_logits(d_real, 1.0f);
    const NodeId fake_term = g.bce_with_logits(d_fake, 0.0f);
    return g.scale(g.add(real_term, fake_term), weight);
}

GeneratorLoss loss_generator(Graph& g, NodeId d_fake, NodeId g_out, NodeId target_masks,
                             float lambda_l1) {
    if (!g.value(g_out).same_shape(g.value(target_masks)))
        throw ShapeError("loss_generator: output/target shape mismatch " +
                         g.value(g_out).shape_str() + " vs " + g.value(target_masks).shape_str());
    GeneratorLoss out;
    out.adv = g.bce_with_logits(d_fake, 1.0f);
    out.l1 = g.l1_loss(g_out, target_masks);
    out.total = g.add(out.adv, g.scale(out.l1, lambda_l1));
    return out;
}

GradMap collect_grads(const Graph& g, const BoundParams& bound) {
    GradMap out;
    for (const auto& [name, id] : bound) out.emplace(name, &g.grad(id));
    return out;
}

void adam_step(ParamStore& params, const GradMap& grads, AdamState& state, const TrainConfig& cfg) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(static_cast<double>(cfg.beta1), static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(static_cast<double>(cfg.beta2), static_cast<double>(state.t));
    for (const auto& name : state.names) {
        auto it = grads.find(name);
        if (it == grads.end())
            throw NumericError("adam_step: missing gradient for parameter '" + name + "'");
        const Tensor& grad = *it->second;
        Tensor& param = params.at(name);
        if (!grad.same_shape(param))
            throw ShapeError("adam_step: gradient shape " + grad.shape_str() +
                             " does not match parameter '" + name + "' " + param.shape_str());
        Tensor& m = state.m.at(name);
        Tensor& v = state.v.at(name);
        const float b1 = cfg.beta1, b2 = cfg.beta2;
        const float lr = cfg.lr, eps = cfg.adam_eps;
        const float ibc1 = static_cast<float>(1.0 / bc1);
        const float ibc2 = static_cast<float>(1.0 / bc2);
        const std::int64_t count = static_cast<std::int64_t>(param.numel());
        const float* gp = grad.data.data();
        float* mp = m.data.data();
        float* vp = v.data.data();
        float* pp = param.data.data();
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < count; ++i) {
            mp[i] = b1 * mp[i] + (1.0f - b1) * gp[i];
            vp[i] = b2 * vp[i] + (1.0f - b2) * gp[i] * gp[i];
            const float mhat = mp[i] * ibc1;
            const float vhat = vp[i] * ibc2;
            pp[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

StepReport train_step(const Tensor& x, const Tensor& y, const Generator& gen,
                      const Discriminator& disc, ParamStore& params, AdamState& adam_g,
                      AdamState& adam_d, const TrainConfig& cfg, RngState& dropout_rng) {
    Graph g;
    const NodeId xn = g.leaf(x);
    const NodeId yn = g.leaf(y);

    // One generator forward serves both phases.
    const BoundParams gp = bind_params(g, params, "g.");
    const NodeId fake = gen.forward(g, xn, gp, dropout_rng);

    // Discriminator phase: the fake is detached so no G gradients exist.
    const BoundParams dp = bind_params(g, params, "d.");
    const NodeId fake_detached = g.detach(fake);
    const NodeId d_real = disc.forward(g, xn, yn, dp);
    const NodeId d_fake_det = disc.forward(g, xn, fake_detached, dp);
    const NodeId ld = loss_discriminator(g, d_real, d_fake_det, cfg.disc_loss_weight);
    g.backward(ld);
    adam_step(params, collect_grads(g, dp), adam_d, cfg);

    // Generator phase: rebind the just-updated D parameters; gradients flow
    // through D into G but only G parameters are stepped.
    const BoundParams dp2 = bind_params(g, params, "d.");
    const NodeId d_fake = disc.forward(g, xn, fake, dp2);
    const GeneratorLoss gl = loss_generator(g, d_fake, fake, yn, cfg.lambda_l1);
    g.backward(gl.total);
    adam_step(params, collect_grads(g, gp), adam_g, cfg);

    StepReport r;
    r.loss_d = g.value(ld)[0];
    r.loss_g_total = g.value(gl.total)[0];
    r.loss_g_adv = g.value(gl.adv)[0];
    r.loss_g_l1 = g.value(gl.l1)[0];
    if (!std::isfinite(r.loss_d) || !std::isfinite(r.loss_g_total) ||
        !std::isfinite(r.loss_g_adv) || !std::isfinite(r.loss_g_l1))
        throw NumericError("train_step produced a non-finite loss (loss_d=" +
                           std::to_string(r.loss_d) + ", loss_g_total=" +
                           std::to_string(r.loss_g_total) + ")");
    return r;
}

Tensor stack_batch(const std::vector<const Tensor*>& items) {
    if (items.empty()) throw ConfigError("stack_batch: empty batch");
    const Tensor& first = *items.front();
    std::vector<int> shape;
    shape.push_back(static_cast<int>(items.size()));
    for (int d : first.shape) shape.push_back(d);
    Tensor out(shape);
    const std::size_t stride = first.numel();
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i]->shape != first.shape)
            throw ShapeError("stack_batch: mismatched sample shapes " + items[i]->shape_str() +
                             " vs " + first.shape_str());
        std::copy(items[i]->data.begin(), items[i]->data.end(),
                  out.data.begin() + static_cast<std::ptrdiff_t>(i * stride));
    }
    return out;
}

TrainResult train(const std::vector<TrainSample>& data, const TrainConfig& cfg,
                  const NetConfig& netcfg, const std::filesystem::path& run_dir) {
    cfg.validate();
    netcfg.validate();
    if (data.empty()) throw ConfigError("train: dataset is empty");

    const Generator gen(netcfg);
    const Discriminator disc(netcfg);

    TrainResult result;
    gen.register_params(result.params);
    disc.register_params(result.params);

    RngState master(cfg.seed);
    RngState init_rng = master.fork(0xA11);
    RngState shuffle_rng = master.fork(0xB22);
    RngState dropout_rng = master.fork(0xC33);
    init_params(result.params, init_rng);

    AdamState adam_g = AdamState::init(result.params, "g.");
    AdamState adam_d = AdamState::init(result.params, "d.");

    std::ofstream metrics_out;
    if (!run_dir.empty()) {
        std::filesystem::create_directories(run_dir);
        metrics_out.open(run_dir / "metrics.jsonl", std::ios::trunc);
        if (!metrics_out)
            throw IoError("cannot open metrics log: " + (run_dir / "metrics.jsonl").string());
    }

    const int n = static_cast<int>(data.size());
    std::vector<int> order(static_cast<std::size_t>(n));
    long long step_index = 0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        for (int i = n - 1; i > 0; --i)
            std::swap(order[static_cast<std::size_t>(i)],
                      order[static_cast<std::size_t>(shuffle_rng.below(static_cast<std::uint64_t>(i + 1)))]);

        std::vector<float> ld, lga, lgl, lgt;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int stop = std::min(n, start + cfg.batch_size);
            std::vector<const Tensor*> xs, ys;
            for (int i = start; i < stop; ++i) {
                xs.push_back(&data[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])].x);
                ys.push_back(&data[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])].y);
            }
            const Tensor xb = stack_batch(xs);
            const Tensor yb = stack_batch(ys);
            ++step_index;
            StepReport r;
            try {
                r = train_step(xb, yb, gen, disc, result.params, adam_g, adam_d, cfg, dropout_rng);
            } catch (const NumericError& e) {
                throw NumericError("step " + std::to_string(step_index) + ": " + e.what());
            }
            ld.push_back(r.loss_d);
            lga.push_back(r.loss_g_adv);
            lgl.push_back(r.loss_g_l1);
            lgt.push_back(r.loss_g_total);
        }

        EpochMetrics em;
        em.epoch = epoch;
        em.loss_d = pairwise_mean(std::span<const float>(ld));
        em.loss_g_adv = pairwise_mean(std::span<const float>(lga));
        em.loss_g_l1 = pairwise_mean(std::span<const float>(lgl));
        em.loss_g_total = pairwise_mean(std::span<const float>(lgt));
        result.metrics.push_back(em);

        if (metrics_out) {
            nlohmann::ordered_json line;
            line["epoch"] = em.epoch;
            line["loss_d"] = em.loss_d;
            line["loss_g_adv"] = em.loss_g_adv;
            line["loss_g_l1"] = em.loss_g_l1;
            line["loss_g_total"] = em.loss_g_total;
            metrics_out << line.dump() << "\n";
            metrics_out.flush();
        }

        if (!run_dir.empty() && cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 &&
            epoch != cfg.epochs) {
            char name[64];
            std::snprintf(name, sizeof(name), "checkpoint_epoch_%04d.ckpt", epoch);
            result.params.save(run_dir / name);
        }
    }

    if (!run_dir.empty()) result.params.save(run_dir / "checkpoint.ckpt");
    return result;
}

} // namespace lgan
