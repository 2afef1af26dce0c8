#include "mcml/diffmath.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace mcml::diff {

namespace {

std::string shape_str(const Mat& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

std::string fmt17(Scalar x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------- ParamStore

Slot& ParamStore::add_vec(const std::string& name, Vec v, bool trainable) {
    if (index_.count(name)) throw SpecError("ParamStore: duplicate slot '" + name + "'");
    Slot s;
    s.name = name;
    s.value = v;
    s.kind = SlotKind::Vector;
    s.trainable = trainable;
    index_[name] = slots_.size();
    slots_.push_back(std::move(s));
    return slots_.back();
}

Slot& ParamStore::add_mat(const std::string& name, Mat m, bool trainable) {
    if (index_.count(name)) throw SpecError("ParamStore: duplicate slot '" + name + "'");
    Slot s;
    s.name = name;
    s.value = std::move(m);
    s.kind = SlotKind::Matrix;
    s.trainable = trainable;
    index_[name] = slots_.size();
    slots_.push_back(std::move(s));
    return slots_.back();
}

bool ParamStore::has(std::string_view name) const {
    return index_.find(name) != index_.end();
}

Slot& ParamStore::at(std::string_view name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw LookupError("ParamStore: no slot '" + std::string(name) + "'");
    return slots_[it->second];
}

const Slot& ParamStore::at(std::string_view name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw LookupError("ParamStore: no slot '" + std::string(name) + "'");
    return slots_[it->second];
}

void ParamStore::save(std::ostream& out) const {
    out << "mcml-params v" << kFormatVersion << "\n";
    for (const Slot& s : slots_) {
        out << s.name << ' ' << (s.kind == SlotKind::Vector ? "vec" : "mat") << ' '
            << s.rows() << ' ' << s.cols() << ' ' << (s.trainable ? 1 : 0) << "\n";
        for (int r = 0; r < s.rows(); ++r) {
            for (int c = 0; c < s.cols(); ++c) {
                if (c) out << ' ';
                out << fmt17(s.value(r, c));
            }
            out << "\n";
        }
    }
}

void ParamStore::save_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    save(out);
}

ParamStore ParamStore::load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "mcml-params v1")
        throw ParseError("checkpoint: missing 'mcml-params v1' header");
    ParamStore ps;
    while (true) {
        auto pos = in.tellg();
        if (!std::getline(in, line)) break;
        if (line.empty()) continue;
        if (line == "memory v1") {  // hand the section back to the caller
            in.seekg(pos);
            break;
        }
        std::istringstream hdr(line);
        std::string name, kind;
        int rows = 0, cols = 0, trainable = 0;
        if (!(hdr >> name >> kind >> rows >> cols >> trainable) || (kind != "vec" && kind != "mat"))
            throw ParseError("checkpoint: bad slot header: " + line);
        Mat m(rows, cols);
        for (int r = 0; r < rows; ++r) {
            if (!std::getline(in, line)) throw ParseError("checkpoint: truncated slot " + name);
            const char* p = line.c_str();
            char* end = nullptr;
            for (int c = 0; c < cols; ++c) {
                m(r, c) = std::strtod(p, &end);
                if (end == p) throw ParseError("checkpoint: bad float in slot " + name);
                p = end;
            }
        }
        if (kind == "vec") {
            if (cols != 1) throw ParseError("checkpoint: vec slot with cols != 1: " + name);
            ps.add_vec(name, m.col(0), trainable != 0);
        } else {
            ps.add_mat(name, std::move(m), trainable != 0);
        }
    }
    return ps;
}

ParamStore ParamStore::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    return load(in);
}

// --------------------------------------------------------------------- Graph

NodeId Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

const Graph::Node& Graph::node(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }

int Graph::slot_index(std::string_view name) const {
    const auto& slots = params_->slots();
    for (std::size_t i = 0; i < slots.size(); ++i)
        if (slots[i].name == name) return static_cast<int>(i);
    throw LookupError("Graph: no slot '" + std::string(name) + "'");
}

NodeId Graph::input(Vec v) {
    Node n{Op::Input, {}, -1, -1, 0.0, std::move(v)};
    return push(std::move(n));
}

NodeId Graph::input(Scalar x) { return input(Vec::Constant(1, x)); }

NodeId Graph::param_vec(std::string_view name) {
    int idx = slot_index(name);
    const Slot& s = params_->slots()[static_cast<std::size_t>(idx)];
    if (s.kind != SlotKind::Vector)
        throw ShapeError("param_vec: slot '" + s.name + "' is not a vector");
    Node n{Op::ParamVec, {}, idx, -1, 0.0, s.value.col(0)};
    return push(std::move(n));
}

NodeId Graph::param_mat_row(std::string_view name, int row) {
    int idx = slot_index(name);
    const Slot& s = params_->slots()[static_cast<std::size_t>(idx)];
    if (s.kind != SlotKind::Matrix)
        throw ShapeError("param_mat_row: slot '" + s.name + "' is not a matrix");
    if (row < 0 || row >= s.rows())
        throw LookupError("param_mat_row: row " + std::to_string(row) + " out of range for '" +
                          s.name + "' (" + std::to_string(s.rows()) + " rows)");
    Node n{Op::ParamMatRow, {}, idx, row, 0.0, s.value.row(row).transpose()};
    return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
    const Vec& va = vec(a);
    const Vec& vb = vec(b);
    if (va.size() != vb.size())
        throw ShapeError("add: dim " + std::to_string(va.size()) + " vs " + std::to_string(vb.size()));
    Node n{Op::Add, {a, b}, -1, -1, 0.0, va + vb};
    return push(std::move(n));
}

NodeId Graph::scale(NodeId a, Scalar c) {
    Node n{Op::ScaleConst, {a}, -1, -1, c, c * vec(a)};
    return push(std::move(n));
}

NodeId Graph::scale(NodeId a, NodeId scalar) {
    if (dim(scalar) != 1) throw ShapeError("scale: scaling factor must be scalar");
    Node n{Op::ScaleNode, {a, scalar}, -1, -1, 0.0, vec(scalar)(0) * vec(a)};
    return push(std::move(n));
}

NodeId Graph::matvec(std::string_view mat_name, NodeId x) {
    int idx = slot_index(mat_name);
    const Slot& s = params_->slots()[static_cast<std::size_t>(idx)];
    if (s.kind != SlotKind::Matrix)
        throw ShapeError("matvec: slot '" + s.name + "' is not a matrix");
    const Vec& vx = vec(x);
    if (s.cols() != vx.size())
        throw ShapeError("matvec: '" + s.name + "' is " + shape_str(s.value) + " but operand has dim " +
                         std::to_string(vx.size()));
    Node n{Op::MatVec, {x}, idx, -1, 0.0, s.value * vx};
    return push(std::move(n));
}

NodeId Graph::concat(std::span<const NodeId> parts) {
    if (parts.empty()) throw ShapeError("concat: no operands");
    Eigen::Index total = 0;
    for (NodeId p : parts) total += vec(p).size();
    Vec out(total);
    Eigen::Index off = 0;
    for (NodeId p : parts) {
        const Vec& v = vec(p);
        out.segment(off, v.size()) = v;
        off += v.size();
    }
    Node n{Op::Concat, {parts.begin(), parts.end()}, -1, -1, 0.0, std::move(out)};
    return push(std::move(n));
}

NodeId Graph::tanh(NodeId a) {
    Node n{Op::Tanh, {a}, -1, -1, 0.0, vec(a).array().tanh().matrix()};
    return push(std::move(n));
}

NodeId Graph::exp(NodeId a) {
    Node n{Op::Exp, {a}, -1, -1, 0.0, vec(a).array().exp().matrix()};
    return push(std::move(n));
}

NodeId Graph::log(NodeId a) {
    const Vec& v = vec(a);
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (!(v(i) > 0.0))
            throw DomainError("log: argument <= 0 (got " + fmt17(v(i)) + ")");
    Node n{Op::Log, {a}, -1, -1, 0.0, v.array().log().matrix()};
    return push(std::move(n));
}

NodeId Graph::sigmoid(NodeId a) {
    const Vec& v = vec(a);
    Vec out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        // branch on sign for numerical stability
        if (v(i) >= 0.0) {
            out(i) = 1.0 / (1.0 + std::exp(-v(i)));
        } else {
            Scalar e = std::exp(v(i));
            out(i) = e / (1.0 + e);
        }
    }
    Node n{Op::Sigmoid, {a}, -1, -1, 0.0, std::move(out)};
    return push(std::move(n));
}

NodeId Graph::dot(NodeId a, NodeId b) {
    const Vec& va = vec(a);
    const Vec& vb = vec(b);
    if (va.size() != vb.size())
        throw ShapeError("dot: dim " + std::to_string(va.size()) + " vs " + std::to_string(vb.size()));
    Node n{Op::Dot, {a, b}, -1, -1, 0.0, Vec::Constant(1, va.dot(vb))};
    return push(std::move(n));
}

NodeId Graph::l2norm(NodeId a) {
    Node n{Op::L2Norm, {a}, -1, -1, 0.0, Vec::Constant(1, vec(a).norm())};
    return push(std::move(n));
}

NodeId Graph::softmax(NodeId a) {
    const Vec& v = vec(a);
    // max-subtraction for stability; gradients of the shifted form are identical
    Scalar m = v.maxCoeff();
    Vec e = (v.array() - m).exp().matrix();
    Node n{Op::Softmax, {a}, -1, -1, 0.0, e / e.sum()};
    return push(std::move(n));
}

NodeId Graph::sum(NodeId a) {
    Node n{Op::Sum, {a}, -1, -1, 0.0, Vec::Constant(1, vec(a).sum())};
    return push(std::move(n));
}

NodeId Graph::mean(NodeId a) {
    Node n{Op::Mean, {a}, -1, -1, 0.0, Vec::Constant(1, vec(a).mean())};
    return push(std::move(n));
}

NodeId Graph::squared_distance(NodeId a, NodeId b) {
    const Vec& va = vec(a);
    const Vec& vb = vec(b);
    if (va.size() != vb.size())
        throw ShapeError("squared_distance: dim " + std::to_string(va.size()) + " vs " +
                         std::to_string(vb.size()));
    Node n{Op::SquaredDistance, {a, b}, -1, -1, 0.0, Vec::Constant(1, (va - vb).squaredNorm())};
    return push(std::move(n));
}

const Vec& Graph::vec(NodeId id) const {
    if (id < 0 || id >= static_cast<NodeId>(nodes_.size()))
        throw LookupError("Graph: bad node id " + std::to_string(id));
    return nodes_[static_cast<std::size_t>(id)].value;
}

Scalar Graph::value(NodeId id) const {
    const Vec& v = vec(id);
    if (v.size() != 1) throw ShapeError("value: node is not scalar (dim " + std::to_string(v.size()) + ")");
    return v(0);
}

void Graph::backward(NodeId loss, Gradients& grads) const {
    if (dim(loss) != 1) throw ShapeError("backward: loss must be scalar");
    std::vector<Vec> adj(nodes_.size());
    auto touch = [&](NodeId id) -> Vec& {
        Vec& a = adj[static_cast<std::size_t>(id)];
        if (a.size() == 0) a = Vec::Zero(nodes_[static_cast<std::size_t>(id)].value.size());
        return a;
    };
    touch(loss)(0) = 1.0;

    const auto& slots = params_->slots();
    auto slot_grad = [&](int idx) -> Mat* {
        const Slot& s = slots[static_cast<std::size_t>(idx)];
        if (!s.trainable) return nullptr;
        auto it = grads.find(s.name);
        if (it == grads.end())
            it = grads.emplace(s.name, Mat::Zero(s.rows(), s.cols())).first;
        return &it->second;
    };

    for (NodeId i = loss; i >= 0; --i) {
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        const Vec& g = adj[static_cast<std::size_t>(i)];
        if (g.size() == 0) continue;
        switch (n.op) {
            case Op::Input:
                break;
            case Op::ParamVec:
                if (Mat* gm = slot_grad(n.slot)) gm->col(0) += g;
                break;
            case Op::ParamMatRow:
                if (Mat* gm = slot_grad(n.slot)) gm->row(n.row) += g.transpose();
                break;
            case Op::Add:
                touch(n.args[0]) += g;
                touch(n.args[1]) += g;
                break;
            case Op::ScaleConst:
                touch(n.args[0]) += n.c * g;
                break;
            case Op::ScaleNode: {
                Scalar s = nodes_[static_cast<std::size_t>(n.args[1])].value(0);
                touch(n.args[0]) += s * g;
                touch(n.args[1])(0) += nodes_[static_cast<std::size_t>(n.args[0])].value.dot(g);
                break;
            }
            case Op::MatVec: {
                const Slot& s = slots[static_cast<std::size_t>(n.slot)];
                const Vec& x = nodes_[static_cast<std::size_t>(n.args[0])].value;
                if (Mat* gm = slot_grad(n.slot)) *gm += g * x.transpose();
                touch(n.args[0]) += s.value.transpose() * g;
                break;
            }
            case Op::Concat: {
                Eigen::Index off = 0;
                for (NodeId p : n.args) {
                    Eigen::Index d = nodes_[static_cast<std::size_t>(p)].value.size();
                    touch(p) += g.segment(off, d);
                    off += d;
                }
                break;
            }
            case Op::Tanh:
                touch(n.args[0]) += (g.array() * (1.0 - n.value.array().square())).matrix();
                break;
            case Op::Exp:
                touch(n.args[0]) += (g.array() * n.value.array()).matrix();
                break;
            case Op::Log:
                touch(n.args[0]) +=
                    (g.array() / nodes_[static_cast<std::size_t>(n.args[0])].value.array()).matrix();
                break;
            case Op::Sigmoid:
                touch(n.args[0]) += (g.array() * n.value.array() * (1.0 - n.value.array())).matrix();
                break;
            case Op::Dot: {
                const Vec& a = nodes_[static_cast<std::size_t>(n.args[0])].value;
                const Vec& b = nodes_[static_cast<std::size_t>(n.args[1])].value;
                touch(n.args[0]) += g(0) * b;
                touch(n.args[1]) += g(0) * a;
                break;
            }
            case Op::L2Norm: {
                const Vec& x = nodes_[static_cast<std::size_t>(n.args[0])].value;
                Scalar norm = n.value(0);
                if (norm > 0.0) touch(n.args[0]) += (g(0) / norm) * x;
                // subgradient 0 at the origin
                break;
            }
            case Op::Softmax: {
                const Vec& y = n.value;
                Scalar gy = g.dot(y);
                touch(n.args[0]) += (y.array() * (g.array() - gy)).matrix();
                break;
            }
            case Op::Sum:
                touch(n.args[0]).array() += g(0);
                break;
            case Op::Mean:
                touch(n.args[0]).array() +=
                    g(0) / static_cast<Scalar>(nodes_[static_cast<std::size_t>(n.args[0])].value.size());
                break;
            case Op::SquaredDistance: {
                const Vec& a = nodes_[static_cast<std::size_t>(n.args[0])].value;
                const Vec& b = nodes_[static_cast<std::size_t>(n.args[1])].value;
                touch(n.args[0]) += 2.0 * g(0) * (a - b);
                touch(n.args[1]) -= 2.0 * g(0) * (a - b);
                break;
            }
        }
    }
}

NodeId unit(Graph& g, NodeId a) {
    // a * exp(-log ||a||) == a / ||a||; log throws on zero norm
    NodeId inv_norm = g.exp(g.scale(g.log(g.l2norm(a)), -1.0));
    return g.scale(a, inv_norm);
}

NodeId cosine(Graph& g, NodeId a, NodeId b) { return g.dot(unit(g, a), unit(g, b)); }

// ----------------------------------------------------------------- eval/check

EvalResult eval_with_grads(const LossBuilder& build, const ParamStore& params) {
    Graph g(params);
    NodeId loss = build(g);
    EvalResult res;
    res.value = g.value(loss);
    for (const Slot& s : params.slots())
        if (s.trainable) res.grads.emplace(s.name, Mat::Zero(s.rows(), s.cols()));
    g.backward(loss, res.grads);
    return res;
}

Scalar eval_value(const LossBuilder& build, const ParamStore& params) {
    Graph g(params);
    return g.value(build(g));
}

GradCheckReport grad_check(const LossBuilder& build, ParamStore& params,
                           Scalar epsilon, Scalar tolerance) {
    if (!(epsilon > 0.0 && epsilon <= 1e-2))
        throw DomainError("grad_check: epsilon must be in (0, 1e-2]");
    EvalResult analytic = eval_with_grads(build, params);
    GradCheckReport report;
    for (Slot& s : params.slots()) {
        if (!s.trainable) continue;
        GradCheckEntry entry;
        entry.slot = s.name;
        const Mat& ga = analytic.grads.at(s.name);
        for (int r = 0; r < s.rows(); ++r) {
            for (int c = 0; c < s.cols(); ++c) {
                Scalar orig = s.value(r, c);
                s.value(r, c) = orig + epsilon;
                Scalar fp = eval_value(build, params);
                s.value(r, c) = orig - epsilon;
                Scalar fm = eval_value(build, params);
                s.value(r, c) = orig;
                Scalar numeric = (fp - fm) / (2.0 * epsilon);
                Scalar a = ga(r, c);
                Scalar rel = std::abs(a - numeric) /
                             std::max({std::abs(a), std::abs(numeric), 1e-8});
                if (rel > entry.max_rel_error) {
                    entry.max_rel_error = rel;
                    entry.row = r;
                    entry.col = c;
                }
            }
        }
        report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
        report.entries.push_back(std::move(entry));
    }
    report.pass = report.max_rel_error <= tolerance;
    return report;
}

// ---------------------------------------------------------------------- Adam

void AdamState::step(ParamStore& params, const Gradients& grads) {
    ++t_;
    Scalar bc1 = 1.0 - std::pow(config_.beta1, static_cast<Scalar>(t_));
    Scalar bc2 = 1.0 - std::pow(config_.beta2, static_cast<Scalar>(t_));
    for (Slot& s : params.slots()) {
        if (!s.trainable) continue;
        auto git = grads.find(s.name);
        if (git == grads.end())
            throw LookupError("adam_step: missing gradient for trainable slot '" + s.name + "'");
        const Mat& g = git->second;
        if (g.rows() != s.rows() || g.cols() != s.cols())
            throw ShapeError("adam_step: gradient shape " + shape_str(g) + " vs slot '" + s.name +
                             "' " + shape_str(s.value));
        auto [it, inserted] = moments_.try_emplace(s.name);
        Moments& mo = it->second;
        if (inserted) {
            mo.m = Mat::Zero(s.rows(), s.cols());
            mo.v = Mat::Zero(s.rows(), s.cols());
        }
        mo.m = config_.beta1 * mo.m + (1.0 - config_.beta1) * g;
        mo.v = config_.beta2 * mo.v.array().matrix() + (1.0 - config_.beta2) * g.array().square().matrix();
        Mat mhat = mo.m / bc1;
        Mat vhat = mo.v / bc2;
        s.value -= config_.lr * ((mhat.array() / (vhat.array().sqrt() + config_.eps)) +
                                 config_.weight_decay * s.value.array())
                                    .matrix();
    }
}

}  // namespace mcml::diff
