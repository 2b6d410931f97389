#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "arts/body_model.hpp"
#include "arts/skeleton.hpp"
#include "arts/types.hpp"

namespace arts::io {

// Self-describing text document: a kind tag, scalar attributes and named
// row-major arrays. Numbers are written with 17 significant digits so values
// round-trip exactly.
class Document {
public:
    std::string kind;

    void set(const std::string& name, double value) { attributes_[name] = value; }
    double attribute(const std::string& name) const;
    bool has_attribute(const std::string& name) const { return attributes_.count(name) != 0; }
    const std::map<std::string, double>& attributes() const { return attributes_; }

    // Arrays keep insertion order; setting an existing name replaces it.
    void put(const std::string& name, const Mat& value);
    const Mat& array(const std::string& name) const;
    bool has_array(const std::string& name) const;
    const std::vector<std::pair<std::string, Mat>>& arrays() const { return arrays_; }

private:
    std::map<std::string, double> attributes_;
    std::vector<std::pair<std::string, Mat>> arrays_;
};

std::string format_number(double value);

std::string to_text(const Document& doc);
Document from_text(const std::string& text);

void save(const std::filesystem::path& path, const Document& doc);
Document load(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

// ---- body model ----

Document model_document(const MiniBodyModel& model);
MiniBodyModel model_from_document(const Document& doc);

// ---- skeletons: one JSON object per line, {"frame": t, "joints": [x0, y0, z0, x1, ...]} ----

std::string skeleton_to_jsonl(const SkeletonSequence& seq);
// Parse errors name the offending line.
SkeletonSequence skeleton_from_jsonl(const std::string& text);

// ---- CSV ----

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    void row(const std::vector<std::string>& cells);
    const std::string& text() const { return text_; }
    void save(const std::filesystem::path& path) const { write_text_file(path, text_); }

private:
    size_t columns_;
    std::string text_;
};

}  // namespace arts::io
