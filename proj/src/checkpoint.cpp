#include "arts/checkpoint.hpp"

#include "arts/error.hpp"

namespace arts {

namespace {

template <class M>
void store(io::Document& doc, const std::string& prefix, const M& module) {
    visit_params(module, prefix, [&](const std::string& name, const Mat& p) { doc.put(name, p); });
}

template <class M>
void restore(const io::Document& doc, const std::string& prefix, M& module) {
    visit_params(module, prefix, [&](const std::string& name, Mat& p) {
        const Mat& stored = doc.array(name);
        require(stored.rows() == p.rows() && stored.cols() == p.cols(), ErrorKind::parse,
                "checkpoint parameter '" + name + "' has the wrong shape");
        p = stored;
    });
}

int int_attribute(const io::Document& doc, const std::string& name) { return static_cast<int>(doc.attribute(name)); }

}  // namespace

io::Document checkpoint_document(const Checkpoint& ck) {
    io::Document doc;
    doc.kind = "arts.checkpoint";
    const RegressorConfig& r = ck.regressor.config;
    doc.set("regressor.frames", r.frames);
    doc.set("regressor.feature_width", r.feature_width);
    doc.set("regressor.width", r.width);
    doc.set("regressor.depth", r.depth);
    doc.set("regressor.heads", r.heads);
    doc.set("regressor.twist_hidden", r.twist_hidden);
    doc.set("regressor.refine_hidden", r.refine_hidden);
    doc.set("regressor.ffn_hidden", r.ffn_hidden);
    store(doc, "regressor.", ck.regressor);
    if (ck.lifter) {
        require(ck.lifter_config.has_value(), ErrorKind::invalid_argument, "checkpoint: lifter without its config");
        const nn::LifterConfig& l = *ck.lifter_config;
        doc.set("lifter.joints", l.joints);
        doc.set("lifter.frames", l.frames);
        doc.set("lifter.width", l.width);
        doc.set("lifter.depth", l.depth);
        doc.set("lifter.heads", l.heads);
        doc.set("lifter.ffn_hidden", l.ffn_hidden);
        store(doc, "lifter.", *ck.lifter);
    }
    return doc;
}

Checkpoint checkpoint_from_document(const io::Document& doc, const MiniBodyModel& model) {
    require(doc.kind == "arts.checkpoint", ErrorKind::parse, "expected an arts.checkpoint document, got '" + doc.kind + "'");
    RegressorConfig r;
    r.frames = int_attribute(doc, "regressor.frames");
    r.feature_width = int_attribute(doc, "regressor.feature_width");
    r.width = int_attribute(doc, "regressor.width");
    r.depth = int_attribute(doc, "regressor.depth");
    r.heads = int_attribute(doc, "regressor.heads");
    r.twist_hidden = int_attribute(doc, "regressor.twist_hidden");
    r.refine_hidden = int_attribute(doc, "regressor.refine_hidden");
    r.ffn_hidden = int_attribute(doc, "regressor.ffn_hidden");
    Checkpoint ck{Regressor::init(r, model, 0), std::nullopt, std::nullopt};
    restore(doc, "regressor.", ck.regressor);
    if (doc.has_attribute("lifter.frames")) {
        nn::LifterConfig l;
        l.joints = int_attribute(doc, "lifter.joints");
        l.frames = int_attribute(doc, "lifter.frames");
        l.width = int_attribute(doc, "lifter.width");
        l.depth = int_attribute(doc, "lifter.depth");
        l.heads = int_attribute(doc, "lifter.heads");
        l.ffn_hidden = int_attribute(doc, "lifter.ffn_hidden");
        Rng rng(0);
        ck.lifter_config = l;
        ck.lifter = nn::Lifter::init(l, rng);
        restore(doc, "lifter.", *ck.lifter);
    }
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    io::save(path, checkpoint_document(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const MiniBodyModel& model) {
    try {
        return checkpoint_from_document(io::load(path), model);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::parse) fail(ErrorKind::parse, path.string() + ": " + e.what());
        throw;
    }
}

}  // namespace arts
