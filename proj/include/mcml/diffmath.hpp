#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcml/errors.hpp"

namespace mcml::diff {

using Scalar = double;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class SlotKind { Vector, Matrix };

// One named parameter. Vector slots are stored as n x 1 matrices so gradients
// and optimizer state share a single shape.
struct Slot {
    std::string name;
    Mat value;
    SlotKind kind = SlotKind::Matrix;
    bool trainable = true;

    int rows() const { return static_cast<int>(value.rows()); }
    int cols() const { return static_cast<int>(value.cols()); }
};

class ParamStore {
public:
    static constexpr int kFormatVersion = 1;

    Slot& add_vec(const std::string& name, Vec v, bool trainable = true);
    Slot& add_mat(const std::string& name, Mat m, bool trainable = true);

    bool has(std::string_view name) const;
    Slot& at(std::string_view name);
    const Slot& at(std::string_view name) const;

    std::vector<Slot>& slots() { return slots_; }
    const std::vector<Slot>& slots() const { return slots_; }

    // Text checkpoint: line 1 "mcml-params v1", then per slot a header line
    // "name kind rows cols trainable" followed by rows lines of cols floats
    // printed with 17 significant digits (exact 64-bit round trip).
    void save(std::ostream& out) const;
    void save_file(const std::string& path) const;
    // Stops before any trailing "memory v1" section.
    static ParamStore load(std::istream& in);
    static ParamStore load_file(const std::string& path);

private:
    std::vector<Slot> slots_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

// slot name -> gradient, same shape as the slot value
using Gradients = std::map<std::string, Mat>;

using NodeId = int;

// Define-by-run expression graph over a read-only ParamStore. Values are
// computed eagerly at node construction; backward() runs exact reverse-mode
// accumulation. Scalars are dim-1 vectors.
class Graph {
public:
    explicit Graph(const ParamStore& params) : params_(&params) {}

    NodeId input(Vec v);
    NodeId input(Scalar x);
    NodeId param_vec(std::string_view name);
    NodeId param_mat_row(std::string_view name, int row);

    NodeId add(NodeId a, NodeId b);
    NodeId scale(NodeId a, Scalar c);
    NodeId scale(NodeId a, NodeId scalar);
    NodeId matvec(std::string_view mat_name, NodeId x);
    NodeId concat(std::span<const NodeId> parts);
    NodeId tanh(NodeId a);
    NodeId exp(NodeId a);
    NodeId log(NodeId a);
    NodeId sigmoid(NodeId a);
    NodeId dot(NodeId a, NodeId b);
    NodeId l2norm(NodeId a);
    NodeId softmax(NodeId a);
    NodeId sum(NodeId a);
    NodeId mean(NodeId a);
    NodeId squared_distance(NodeId a, NodeId b);

    const Vec& vec(NodeId id) const;
    Scalar value(NodeId id) const;  // scalar nodes only
    int dim(NodeId id) const { return static_cast<int>(vec(id).size()); }
    const ParamStore& params() const { return *params_; }

    // Accumulates d(loss)/d(slot) into grads for every trainable slot the
    // graph touches; loss must be scalar.
    void backward(NodeId loss, Gradients& grads) const;

private:
    enum class Op {
        Input, ParamVec, ParamMatRow,
        Add, ScaleConst, ScaleNode, MatVec, Concat,
        Tanh, Exp, Log, Sigmoid,
        Dot, L2Norm, Softmax, Sum, Mean, SquaredDistance,
    };
    struct Node {
        Op op;
        std::vector<NodeId> args;
        int slot = -1;   // ParamVec / ParamMatRow / MatVec
        int row = -1;    // ParamMatRow
        Scalar c = 0.0;  // ScaleConst
        Vec value;
    };

    NodeId push(Node n);
    const Node& node(NodeId id) const;
    int slot_index(std::string_view name) const;

    const ParamStore* params_;
    std::vector<Node> nodes_;
};

// Convenience compositions (all within the fixed op vocabulary).
NodeId unit(Graph& g, NodeId a);                // a / ||a||, requires ||a|| > 0
NodeId cosine(Graph& g, NodeId a, NodeId b);    // unit(a) . unit(b)

using LossBuilder = std::function<NodeId(Graph&)>;

struct EvalResult {
    Scalar value = 0.0;
    Gradients grads;  // one entry per trainable slot (zero if untouched)
};

EvalResult eval_with_grads(const LossBuilder& build, const ParamStore& params);
Scalar eval_value(const LossBuilder& build, const ParamStore& params);

struct GradCheckEntry {
    std::string slot;
    Scalar max_rel_error = 0.0;
    int row = -1, col = -1;  // worst element
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    Scalar max_rel_error = 0.0;
    bool pass = true;
};

// Central finite differences (f(x+e) - f(x-e)) / 2e against analytic grads;
// relative error |a - n| / max(|a|, |n|, 1e-8). Restores params on exit.
GradCheckReport grad_check(const LossBuilder& build, ParamStore& params,
                           Scalar epsilon, Scalar tolerance);

struct AdamConfig {
    Scalar lr = 1e-2;
    Scalar beta1 = 0.9;
    Scalar beta2 = 0.999;
    Scalar eps = 1e-8;
    Scalar weight_decay = 0.0;  // decoupled, applied directly to the slot
};

class AdamState {
public:
    explicit AdamState(AdamConfig config = {}) : config_(config) {}

    // One Adam step with decoupled weight decay over all trainable slots.
    void step(ParamStore& params, const Gradients& grads);

    std::int64_t t() const { return t_; }
    const AdamConfig& config() const { return config_; }

private:
    struct Moments {
        Mat m, v;
    };
    AdamConfig config_;
    std::map<std::string, Moments> moments_;
    std::int64_t t_ = 0;
};

}  // namespace mcml::diff
