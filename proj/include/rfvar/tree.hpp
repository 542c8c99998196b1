#ifndef RFVAR_TREE_HPP
#define RFVAR_TREE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rfvar/common.hpp"
#include "rfvar/dataset.hpp"

namespace rfvar {

enum class TreeType { cart, ci };

inline std::string to_string(TreeType type) { return type == TreeType::cart ? "cart" : "ci"; }

inline TreeType parse_tree_type(const std::string& text) {
    if (text == "cart") {
        return TreeType::cart;
    }
    if (text == "ci") {
        return TreeType::ci;
    }
    throw ValidationError("unknown tree type '" + text + "' (valid: cart, ci)");
}

/// Either an internal node (rule + two children) or a leaf (prediction =
/// count-weighted mean of the responses routed to it).
struct TreeNode {
    SplitRule rule;
    std::int64_t left = -1;   // node index, -1 for leaf
    std::int64_t right = -1;  // node index, -1 for leaf
    double prediction = 0.0;  // leaf only

    bool is_leaf() const { return left < 0; }

    bool operator==(const TreeNode&) const = default;
};

/// Binary regression tree with nodes stored in preorder (root first, then
/// the full left subtree, then the right subtree).
struct TreeModel {
    std::vector<TreeNode> nodes;
    std::size_t p = 0;
    TreeType learner = TreeType::cart;

    /// Index of the leaf x routes to under the project-wide rule semantics
    /// (x[variable] <= cut goes left).
    std::size_t leaf_for(std::span<const double> x) const {
        if (x.size() != p) {
            throw ValidationError("prediction input has length " + std::to_string(x.size()) +
                                  ", tree expects " + std::to_string(p));
        }
        std::size_t node = 0;
        while (!nodes[node].is_leaf()) {
            const SplitRule& rule = nodes[node].rule;
            node = static_cast<std::size_t>(x[rule.variable] <= rule.cut ? nodes[node].left
                                                                         : nodes[node].right);
        }
        return node;
    }

    double predict(std::span<const double> x) const { return nodes[leaf_for(x)].prediction; }

    bool operator==(const TreeModel&) const = default;
};

inline double predict_tree(const TreeModel& tree, std::span<const double> x) {
    return tree.predict(x);
}

}  // namespace rfvar

#endif  // RFVAR_TREE_HPP
