#include "arts/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "arts/error.hpp"
#include "json.hpp"

namespace arts::io {

using nlohmann::json;

double Document::attribute(const std::string& name) const {
    const auto it = attributes_.find(name);
    require(it != attributes_.end(), ErrorKind::parse, "document '" + kind + "' has no attribute '" + name + "'");
    return it->second;
}

void Document::put(const std::string& name, const Mat& value) {
    for (auto& [n, m] : arrays_) {
        if (n == name) {
            m = value;
            return;
        }
    }
    arrays_.emplace_back(name, value);
}

const Mat& Document::array(const std::string& name) const {
    for (const auto& [n, m] : arrays_) {
        if (n == name) return m;
    }
    fail(ErrorKind::parse, "document '" + kind + "' has no array '" + name + "'");
}

bool Document::has_array(const std::string& name) const {
    for (const auto& entry : arrays_) {
        if (entry.first == name) return true;
    }
    return false;
}

std::string format_number(double value) {
    require(std::isfinite(value), ErrorKind::invalid_argument, "cannot serialize a non-finite number");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string to_text(const Document& doc) {
    std::string out = "{\n  \"kind\": " + json(doc.kind).dump() + ",\n  \"attributes\": {";
    bool first = true;
    for (const auto& [name, value] : doc.attributes()) {
        out += first ? "\n    " : ",\n    ";
        out += json(name).dump() + ": " + format_number(value);
        first = false;
    }
    out += first ? "},\n  \"arrays\": [" : "\n  },\n  \"arrays\": [";
    first = true;
    for (const auto& [name, m] : doc.arrays()) {
        out += first ? "\n    " : ",\n    ";
        out += "{\"name\": " + json(name).dump() + ", \"shape\": [" + std::to_string(m.rows()) + ", " +
               std::to_string(m.cols()) + "], \"data\": [";
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                if (r != 0 || c != 0) out += ", ";
                out += format_number(m(r, c));
            }
        }
        out += "]}";
        first = false;
    }
    out += first ? "]\n}\n" : "\n  ]\n}\n";
    return out;
}

Document from_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::parse, std::string("malformed document: ") + e.what());
    }
    try {
        Document doc;
        doc.kind = j.at("kind").get<std::string>();
        for (const auto& [name, value] : j.at("attributes").items()) doc.set(name, value.get<double>());
        for (const json& a : j.at("arrays")) {
            const auto shape = a.at("shape").get<std::vector<long>>();
            const auto& data = a.at("data");
            const std::string name = a.at("name").get<std::string>();
            require(shape.size() == 2 && shape[0] >= 0 && shape[1] >= 0, ErrorKind::parse,
                    "array '" + name + "' must have a 2-element shape");
            require(static_cast<long>(data.size()) == shape[0] * shape[1], ErrorKind::parse,
                    "array '" + name + "' data length does not match its shape");
            Mat m(shape[0], shape[1]);
            for (long r = 0; r < shape[0]; ++r) {
                for (long c = 0; c < shape[1]; ++c) m(r, c) = data[static_cast<size_t>(r * shape[1] + c)].get<double>();
            }
            doc.put(name, m);
        }
        return doc;
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("invalid document structure: ") + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        require(!ec, ErrorKind::io, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::io, "cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    require(static_cast<bool>(out), ErrorKind::io, "failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void save(const std::filesystem::path& path, const Document& doc) { write_text_file(path, to_text(doc)); }

Document load(const std::filesystem::path& path) {
    try {
        return from_text(read_text_file(path));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::parse) fail(ErrorKind::parse, path.string() + ": " + e.what());
        throw;
    }
}

// ---- body model ----

Document model_document(const MiniBodyModel& model) {
    Document doc;
    doc.kind = "arts.body_model";
    doc.set("vertex_count", model.vertex_count());
    doc.set("joint_count", model.joint_count());
    doc.put("template_vertices", model.template_vertices);
    doc.put("shape_blend", model.shape_blend);
    doc.put("joint_regressor", model.joint_regressor);
    doc.put("skin_weights", model.skin_weights);
    Mat parents(1, model.joint_count());
    for (int j = 0; j < model.joint_count(); ++j) parents(0, j) = model.parents[j];
    doc.put("parents", parents);
    return doc;
}

MiniBodyModel model_from_document(const Document& doc) {
    require(doc.kind == "arts.body_model", ErrorKind::parse, "expected an arts.body_model document, got '" + doc.kind + "'");
    MiniBodyModel model;
    model.template_vertices = doc.array("template_vertices");
    model.shape_blend = doc.array("shape_blend");
    model.joint_regressor = doc.array("joint_regressor");
    model.skin_weights = doc.array("skin_weights");
    const Mat& parents = doc.array("parents");
    for (Eigen::Index j = 0; j < parents.size(); ++j) model.parents.push_back(static_cast<int>(parents(j)));
    require(!model.parents.empty(), ErrorKind::parse, "body model has no joints");
    try {
        model.edges = KinematicTree(model.parents).edges();
        validate_model(model);
    } catch (const Error& e) {
        fail(ErrorKind::parse, std::string("invalid body model: ") + e.what());
    }
    return model;
}

// ---- skeletons ----

std::string skeleton_to_jsonl(const SkeletonSequence& seq) {
    std::string out;
    for (int t = 0; t < seq.frame_count(); ++t) {
        out += "{\"frame\": " + std::to_string(t) + ", \"joints\": [";
        const Points& f = seq.frames[t];
        for (Eigen::Index k = 0; k < f.rows(); ++k) {
            for (int a = 0; a < 3; ++a) {
                if (k != 0 || a != 0) out += ", ";
                out += format_number(f(k, a));
            }
        }
        out += "]}\n";
    }
    return out;
}

SkeletonSequence skeleton_from_jsonl(const std::string& text) {
    SkeletonSequence seq;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            fail(ErrorKind::parse, where + "malformed record (" + e.what() + ")");
        }
        try {
            const int frame = j.at("frame").get<int>();
            require(frame == seq.frame_count(), ErrorKind::parse,
                    where + "expected frame " + std::to_string(seq.frame_count()) + ", got " + std::to_string(frame));
            const auto values = j.at("joints").get<std::vector<double>>();
            require(!values.empty() && values.size() % 3 == 0, ErrorKind::parse,
                    where + "joint list length must be a positive multiple of 3");
            const Eigen::Index k = static_cast<Eigen::Index>(values.size() / 3);
            require(seq.frames.empty() || seq.frames.front().rows() == k, ErrorKind::parse,
                    where + "joint count differs from the first frame");
            Points f(k, 3);
            for (Eigen::Index i = 0; i < k; ++i) {
                for (int a = 0; a < 3; ++a) {
                    const double v = values[static_cast<size_t>(3 * i + a)];
                    require(std::isfinite(v), ErrorKind::parse, where + "non-finite coordinate");
                    f(i, a) = v;
                }
            }
            seq.frames.push_back(std::move(f));
        } catch (const json::exception& e) {
            fail(ErrorKind::parse, where + "invalid record (" + e.what() + ")");
        }
    }
    return seq;
}

// ---- CSV ----

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    require(!header.empty(), ErrorKind::invalid_argument, "csv: empty header");
    row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    require(cells.size() == columns_, ErrorKind::shape_mismatch, "csv: row width does not match the header");
    for (size_t i = 0; i < cells.size(); ++i) {
        require(cells[i].find_first_of(",\n\"") == std::string::npos, ErrorKind::invalid_argument,
                "csv: cell contains a separator");
        if (i != 0) text_ += ',';
        text_ += cells[i];
    }
    text_ += '\n';
}

}  // namespace arts::io
