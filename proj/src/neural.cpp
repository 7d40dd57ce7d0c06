#include "cfn/neural.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace cfn {

TaskShape task_shape(Task task) {
    switch (task) {
        case Task::Sudoku: return {81, 9, 36, 81, false};
        case Task::Futoshiki: return {25, 5, 21, 25, false};
        case Task::MinCut:
        case Task::MaxCut: return {60, 2, 3, 1, true};
    }
    throw std::logic_error("task_shape: unknown task");
}

void encode_pair_features(Task task, const Sample& s, int i, int j, double* out) {
    switch (task) {
        case Task::Sudoku: {
            std::memset(out, 0, sizeof(double) * 36);
            out[i / 9] = 1.0;
            out[9 + i % 9] = 1.0;
            out[18 + j / 9] = 1.0;
            out[27 + j % 9] = 1.0;
            return;
        }
        case Task::Futoshiki: {
            std::memset(out, 0, sizeof(double) * 21);
            const int size = s.size > 0 ? s.size : 5;
            if (size != 5)
                throw std::invalid_argument("encode_pair_features: only 5x5 grids are supported");
            out[i / size] = 1.0;
            out[5 + i % size] = 1.0;
            out[10 + j / size] = 1.0;
            out[15 + j % size] = 1.0;
            double rel = 0.0;
            for (const auto& q : s.inequalities) {
                if (q.a == i && q.b == j) rel = q.dir > 0 ? 1.0 : -1.0;
                if (q.a == j && q.b == i) rel = q.dir > 0 ? -1.0 : 1.0;
            }
            out[20] = rel;
            return;
        }
        case Task::MinCut:
        case Task::MaxCut: {
            std::memset(out, 0, sizeof(double) * 3);
            for (const auto& e : s.edges)
                if ((e[0] == i && e[1] == j) || (e[0] == j && e[1] == i)) {
                    out[e[2]] = 1.0;
                    return;
                }
            throw std::invalid_argument("encode_pair_features: pair is not an edge of the instance");
        }
    }
}

Model Model::create(Task task, std::uint64_t seed) {
    Model m;
    m.task = task;
    m.shape = task_shape(task);
    m.net = ResMlp(m.shape.f_in, m.shape.f_out);
    m.init_seed = seed;
    Rng rng(Rng::mix(seed, 0x6d6f64656cULL));
    m.net.init(rng);
    return m;
}

double softplus(double x) {
    // log(1+e^x) without overflow on either tail
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double softplus_derivative(double x) {
    if (x > 30.0) return 1.0;
    if (x < -30.0) return std::exp(x);
    return 1.0 / (1.0 + std::exp(-x));
}

Matrix predict_pair_matrix(const Model& model, const Sample& s, int i, int j) {
    std::vector<double> feats(std::size_t(model.shape.f_in));
    encode_pair_features(model.task, s, i, j, feats.data());
    std::vector<double> out(std::size_t(model.shape.f_out));
    model.net.forward(feats.data(), out.data(), nullptr);
    if (model.shape.scalar_head) {
        const double c = softplus(out[0]);
        Matrix m(2, 2);
        if (model.task == Task::MaxCut) {
            m.at(0, 0) = c;
            m.at(1, 1) = c;
        } else {
            m.at(0, 1) = c;
            m.at(1, 0) = c;
        }
        return m;
    }
    const int d = model.shape.d;
    Matrix m(d, d);
    m.v.assign(out.begin(), out.end());
    return m;
}

Gm predict_gm(const Model& model, const Sample& s, bool conditioned) {
    const TaskShape& shape = model.shape;
    Gm gm(std::vector<int>(std::size_t(shape.n), shape.d));
    std::vector<std::pair<int, int>> pairs;
    std::vector<double> feats;
    for_each_pair(model.task, s, [&](int i, int j, const double* f) {
        pairs.emplace_back(i, j);
        feats.insert(feats.end(), f, f + shape.f_in);
    });
    const int batch = int(pairs.size());
    std::vector<double> out(std::size_t(batch) * std::size_t(shape.f_out));
    model.net.forward_batch(feats.data(), batch, out.data(), nullptr);
    Matrix m(shape.d, shape.d);
    for (int p = 0; p < batch; ++p) {
        const double* o = out.data() + std::size_t(p) * std::size_t(shape.f_out);
        if (shape.scalar_head) {
            const double c = softplus(o[0]);
            m.v.assign(m.v.size(), 0.0);
            if (model.task == Task::MaxCut) {
                m.at(0, 0) = c;
                m.at(1, 1) = c;
            } else {
                m.at(0, 1) = c;
                m.at(1, 0) = c;
            }
        } else {
            m.v.assign(o, o + shape.f_out);
        }
        gm.set_pair(pairs[std::size_t(p)].first, pairs[std::size_t(p)].second, m);
    }
    if (conditioned) return condition(gm, s.hints(model.task));
    return gm;
}

/* ---------- checkpoints ---------- */

static nlohmann::json blocks_to_json(const ResMlp& net, const std::vector<double>& flat) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& blk : net.layout()) {
        if (blk.cols == 0) {
            nlohmann::json b = nlohmann::json::array();
            for (int r = 0; r < blk.rows; ++r) b.push_back(flat[blk.offset + std::size_t(r)]);
            layers.push_back(std::move(b));
        } else {
            nlohmann::json w = nlohmann::json::array();
            for (int r = 0; r < blk.rows; ++r) {
                nlohmann::json row = nlohmann::json::array();
                for (int c = 0; c < blk.cols; ++c)
                    row.push_back(flat[blk.offset + std::size_t(r) * std::size_t(blk.cols) +
                                       std::size_t(c)]);
                w.push_back(std::move(row));
            }
            layers.push_back(std::move(w));
        }
    }
    return layers;
}

static void blocks_from_json(const ResMlp& net, const nlohmann::json& layers,
                             std::vector<double>& flat) {
    const auto layout = net.layout();
    if (layers.size() != layout.size())
        throw std::invalid_argument("checkpoint: layer count mismatch");
    for (std::size_t b = 0; b < layout.size(); ++b) {
        const auto& blk = layout[b];
        const auto& src = layers[b];
        if (blk.cols == 0) {
            if (int(src.size()) != blk.rows)
                throw std::invalid_argument("checkpoint: bias length mismatch");
            for (int r = 0; r < blk.rows; ++r)
                flat[blk.offset + std::size_t(r)] = src[std::size_t(r)].get<double>();
        } else {
            if (int(src.size()) != blk.rows)
                throw std::invalid_argument("checkpoint: weight row count mismatch");
            for (int r = 0; r < blk.rows; ++r) {
                const auto& row = src[std::size_t(r)];
                if (int(row.size()) != blk.cols)
                    throw std::invalid_argument("checkpoint: weight column count mismatch");
                for (int c = 0; c < blk.cols; ++c)
                    flat[blk.offset + std::size_t(r) * std::size_t(blk.cols) + std::size_t(c)] =
                        row[std::size_t(c)].get<double>();
            }
        }
    }
}

void save_checkpoint(const std::string& path, const Model& model, const Adam* adam) {
    nlohmann::json doc;
    doc["version"] = 1;
    doc["task"] = task_name(model.task);
    doc["f_in"] = model.shape.f_in;
    doc["f_out"] = model.shape.f_out;
    doc["width"] = ResMlp::kWidth;
    doc["hidden_layers"] = ResMlp::kHiddenLayers;
    doc["d"] = model.shape.d;
    doc["seed"] = model.init_seed;
    doc["weights"] = blocks_to_json(model.net, model.net.params());
    if (adam) {
        nlohmann::json a;
        a["t"] = adam->t();
        a["m"] = blocks_to_json(model.net, adam->m());
        a["v"] = blocks_to_json(model.net, adam->v());
        const AdamConfig& c = adam->config();
        a["lr"] = c.lr;
        a["beta1"] = c.beta1;
        a["beta2"] = c.beta2;
        a["eps"] = c.eps;
        a["weight_decay"] = c.weight_decay;
        a["decoupled_decay"] = c.decoupled_decay;
        doc["adam"] = std::move(a);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
    out << doc.dump() << '\n';
}

Model load_checkpoint(const std::string& path, Adam* adam_out) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("checkpoint: cannot open: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("checkpoint: malformed json: ") + e.what());
    }
    try {
        if (doc.at("version").get<int>() != 1)
            throw std::invalid_argument("checkpoint: unsupported version");
        Model model;
        model.task = task_from_name(doc.at("task").get<std::string>());
        model.shape = task_shape(model.task);
        if (doc.at("f_in").get<int>() != model.shape.f_in ||
            doc.at("f_out").get<int>() != model.shape.f_out ||
            doc.at("width").get<int>() != ResMlp::kWidth ||
            doc.at("hidden_layers").get<int>() != ResMlp::kHiddenLayers)
            throw std::invalid_argument("checkpoint: architecture mismatch for task");
        model.net = ResMlp(model.shape.f_in, model.shape.f_out);
        model.init_seed = doc.value("seed", std::uint64_t(0));
        blocks_from_json(model.net, doc.at("weights"), model.net.params());
        if (adam_out && doc.contains("adam")) {
            const auto& a = doc.at("adam");
            AdamConfig cfg;
            cfg.lr = a.at("lr").get<double>();
            cfg.beta1 = a.at("beta1").get<double>();
            cfg.beta2 = a.at("beta2").get<double>();
            cfg.eps = a.at("eps").get<double>();
            cfg.weight_decay = a.at("weight_decay").get<double>();
            cfg.decoupled_decay = a.value("decoupled_decay", false);
            std::vector<double> m(model.net.param_count(), 0.0), v(model.net.param_count(), 0.0);
            *adam_out = Adam(model.net.param_count(), cfg);
            blocks_from_json(model.net, a.at("m"), m);
            blocks_from_json(model.net, a.at("v"), v);
            adam_out->restore(a.at("t").get<std::int64_t>(), std::move(m), std::move(v));
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("checkpoint: schema error: ") + e.what());
    }
}

}  // namespace cfn
