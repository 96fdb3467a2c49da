#include "cawi/io.hpp"

#include <fstream>
#include <stdexcept>

namespace cawi {

namespace {

Json vector_to_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Vector vector_from_json(const Json& j) {
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(std::move(row));
    }
    return out;
}

Matrix matrix_from_json(const Json& j) {
    if (!j.is_array()) throw std::runtime_error("matrix: expected an array of rows");
    const auto rows = j.size();
    const auto cols = rows ? j[0].size() : 0;
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        if (j[r].size() != cols) throw std::runtime_error("matrix: ragged rows");
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
    return m;
}

Json copula_to_json(const CopulaModel& model) {
    Json j;
    j["family"] = family_name(model.family);
    j["d"] = model.d;
    if (is_archimedean(model.family)) j["theta"] = model.theta;
    if (model.family == CopulaFamily::student_t) j["nu"] = model.nu;
    if (is_elliptical(model.family)) j["R"] = matrix_to_json(model.R);
    Json diag;
    diag["bar_tau"] = model.diagnostics.bar_tau;
    diag["clamped"] = model.diagnostics.clamped;
    diag["subsampled"] = model.diagnostics.subsampled;
    Json profile = Json::array();
    for (const auto& [nu, ll] : model.diagnostics.nu_loglik_profile)
        profile.push_back({{"nu", nu}, {"loglik", ll}});
    diag["nu_loglik_profile"] = profile;
    j["diagnostics"] = diag;
    return j;
}

CopulaModel copula_from_json(const Json& j) {
    try {
        CopulaModel m;
        m.family = parse_family(j.at("family").get<std::string>());
        m.d = j.at("d").get<std::size_t>();
        if (is_archimedean(m.family)) m.theta = j.at("theta").get<double>();
        if (m.family == CopulaFamily::student_t) m.nu = j.at("nu").get<double>();
        if (is_elliptical(m.family)) m.R = matrix_from_json(j.at("R"));
        if (j.contains("diagnostics")) {
            const auto& diag = j["diagnostics"];
            m.diagnostics.bar_tau = diag.value("bar_tau", 0.0);
            m.diagnostics.clamped = diag.value("clamped", false);
            m.diagnostics.subsampled = diag.value("subsampled", false);
            if (diag.contains("nu_loglik_profile"))
                for (const auto& e : diag["nu_loglik_profile"])
                    m.diagnostics.nu_loglik_profile.emplace_back(e.at("nu").get<double>(),
                                                                 e.at("loglik").get<double>());
        }
        validate(m);
        return m;
    } catch (const Json::exception& e) {
        throw std::runtime_error(std::string("copula file: ") + e.what());
    }
}

Json weight_init_to_json(const WeightInit& init) {
    Json j;
    j["d"] = init.input_dim();
    j["h"] = init.width();
    j["W"] = matrix_to_json(init.W);
    j["b"] = vector_to_json(init.b);
    j["provenance"] = {
        {"family", family_name(init.provenance.family)},
        {"marginal", marginal_name(init.provenance.marginal)},
        {"seed", init.provenance.seed},
        {"fold_index", init.provenance.fold_index},
        {"stream_id", init.provenance.stream_id},
    };
    return j;
}

WeightInit weight_init_from_json(const Json& j) {
    try {
        WeightInit init;
        init.W = matrix_from_json(j.at("W"));
        init.b = vector_from_json(j.at("b"));
        if (init.W.cols() != init.b.size())
            throw std::runtime_error("weight init: W columns and b length differ");
        const auto& p = j.at("provenance");
        init.provenance.family = parse_family(p.at("family").get<std::string>());
        init.provenance.marginal = parse_marginal(p.at("marginal").get<std::string>());
        init.provenance.seed = p.at("seed").get<std::uint64_t>();
        init.provenance.fold_index = p.at("fold_index").get<std::size_t>();
        init.provenance.stream_id = p.value("stream_id", std::uint64_t{0});
        return init;
    } catch (const Json::exception& e) {
        throw std::runtime_error(std::string("weight init file: ") + e.what());
    }
}

Json arch_to_json(const ArchSpec& arch) {
    return {
        {"kind", arch_name(arch.kind)},
        {"h", arch.h},
        {"layer_widths", arch.layer_widths},
        {"bls", {{"q", arch.bls.q}, {"p", arch.bls.p}, {"s", arch.bls.s}, {"r", arch.bls.r}}},
        {"activation", activation_name(arch.activation)},
        {"enhancement_activation", activation_name(arch.enhancement_activation)},
        {"lambda", arch.lambda},
    };
}

ArchSpec arch_from_json(const Json& j) {
    ArchSpec a;
    a.kind = parse_arch(j.at("kind").get<std::string>());
    a.h = j.at("h").get<std::size_t>();
    a.layer_widths = j.at("layer_widths").get<std::vector<std::size_t>>();
    const auto& b = j.at("bls");
    a.bls = {b.at("q").get<std::size_t>(), b.at("p").get<std::size_t>(),
             b.at("s").get<std::size_t>(), b.at("r").get<std::size_t>()};
    a.activation = parse_activation(j.at("activation").get<std::string>());
    a.enhancement_activation = parse_activation(j.at("enhancement_activation").get<std::string>());
    a.lambda = j.at("lambda").get<double>();
    validate(a);
    return a;
}

Json trained_model_to_json(const TrainedModel& model) {
    Json inits = Json::array();
    for (const auto& init : model.inits) inits.push_back(weight_init_to_json(init));
    Json scaler;
    scaler["means"] = vector_to_json(model.scaler.means);
    scaler["stddevs"] = vector_to_json(model.scaler.stddevs);
    scaler["constant"] = model.scaler.constant;
    return {
        {"arch", arch_to_json(model.arch)},
        {"d", model.d},
        {"a", model.a},
        {"theta", matrix_to_json(model.theta)},
        {"scaler", scaler},
        {"inits", inits},
    };
}

TrainedModel trained_model_from_json(const Json& j) {
    try {
        TrainedModel m;
        m.arch = arch_from_json(j.at("arch"));
        m.d = j.at("d").get<std::size_t>();
        m.a = j.at("a").get<std::size_t>();
        m.theta = matrix_from_json(j.at("theta"));
        const auto& s = j.at("scaler");
        m.scaler.means = vector_from_json(s.at("means"));
        m.scaler.stddevs = vector_from_json(s.at("stddevs"));
        m.scaler.constant = s.at("constant").get<std::vector<bool>>();
        for (const auto& init : j.at("inits")) m.inits.push_back(weight_init_from_json(init));
        if (m.a != feature_width(m.arch, m.d) || static_cast<std::size_t>(m.theta.rows()) != m.a)
            throw std::runtime_error("trained model: feature width does not match the architecture");
        return m;
    } catch (const Json::exception& e) {
        throw std::runtime_error(std::string("trained model file: ") + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw std::runtime_error("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

}  // namespace cawi
