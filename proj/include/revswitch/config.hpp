#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "revswitch/kernels.hpp"

namespace revswitch::config {

// Run configurations are plain JSON. Every schema failure raises ConfigError
// naming the dotted field path and, when it can be found, its line.

class Document {
public:
    static Document parse(std::string text, std::string source = "<config>");
    static Document load(const std::filesystem::path& path);

    const nlohmann::json& root() const { return root_; }
    const std::string& text() const { return text_; }
    const std::string& source() const { return source_; }

    /// 1-based line of the key at a dotted path ("family.eta", "terms[1].type");
    /// falls back to the deepest ancestor found, 0 if none.
    int line_of(const std::string& path) const;

private:
    nlohmann::json root_;
    std::string text_;
    std::string source_;
};

[[noreturn]] void fail(const Document& doc, const std::string& path, const std::string& message);

/// Typed view of one JSON object inside a document.
class Node {
public:
    Node(const Document& doc, const nlohmann::json& value, std::string path);

    const Document& document() const { return *doc_; }
    const nlohmann::json& json() const { return *value_; }
    const std::string& path() const { return path_; }
    std::string child_path(const std::string& key) const;

    bool has(const std::string& key) const;
    Node child(const std::string& key) const;
    std::optional<Node> optional_child(const std::string& key) const;
    /// Elements of an array-valued key.
    std::vector<Node> elements(const std::string& key) const;

    double number(const std::string& key) const;
    double number(const std::string& key, double fallback) const;
    double positive(const std::string& key, double fallback) const;
    int integer(const std::string& key, int fallback, int min_value) const;
    bool boolean(const std::string& key, bool fallback) const;
    std::string string(const std::string& key, const std::string& fallback) const;
    std::vector<double> numbers(const std::string& key) const;
    Eigen::MatrixXd matrix(const std::string& key, int rows, int cols) const;

    /// Rejects keys outside `allowed`.
    void only(const std::vector<std::string>& allowed) const;

    [[noreturn]] void fail(const std::string& key, const std::string& message) const;

private:
    const nlohmann::json& get(const std::string& key) const;

    const Document* doc_;
    const nlohmann::json* value_;
    std::string path_;
};

/// {"dirac": d, "terms": [{"type": "cosine", "coeffs": [...]},
///  {"type": "bessel", "eta", "beta", "amplitude"}, {"type": "gaussian", "amplitude", "width"},
///  {"type": "exponential", "eta", "amplitude"}], "lmax": n}
kernels::KernelSpec parse_kernel(const Node& node);

/// {"name": "cosine" | "harmonics" | "bessel" | "exponential" | "custom", ...}.
/// Every named family adds -mu cos x to its base kernel:
///   cosine       delta - (1/pi) cos
///   harmonics    delta - (1/pi) cos + sum_l c_l cos(l x), "coefficients" c_2, c_3, ...
///                (default 3/20, 1/10)
///   bessel       (1 - eta^2 d_xx)^(-beta), "eta", "beta", "amplitude"
///   exponential  periodized amplitude/(2 eta) exp(-|x|/eta) - (1/pi) cos
///   custom       "base" and "slope" kernel declarations
kernels::KernelFamily parse_family(const Node& node);

} // namespace revswitch::config
