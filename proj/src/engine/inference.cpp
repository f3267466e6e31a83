#include "cardiocep/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cardiocep {

namespace {

std::vector<double> sample_points(const Universe& u, int resolution)
{
    const auto n = static_cast<std::size_t>(resolution);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = u.lo + (u.hi - u.lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return x;
}

std::vector<double> sample_terms(const LinguisticVariable& output, const std::vector<double>& x)
{
    std::vector<double> mu;
    mu.reserve(output.terms.size() * x.size());
    for (const auto& term : output.terms) {
        for (double xi : x) {
            mu.push_back(membership(term.shape, xi));
        }
    }
    return mu;
}

// NaN when the clipped envelope is zero at every sample.
double cog_on_grid(const std::vector<double>& x, const std::vector<double>& mu, std::span<const double> clips, std::vector<double>& env)
{
    const std::size_t n = x.size();
    env.assign(n, 0.0);
    for (std::size_t t = 0; t < clips.size(); ++t) {
        const double clip = clips[t];
        if (clip <= 0.0) {
            continue;
        }
        const double* row = mu.data() + t * n;
        for (std::size_t i = 0; i < n; ++i) {
            env[i] = std::max(env[i], std::min(clip, row[i]));
        }
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += x[i] * env[i];
        den += env[i];
    }
    return den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

} // namespace

double defuzzify_cog(const std::map<std::string, double>& activated, const LinguisticVariable& output, int resolution)
{
    if (resolution < 2) {
        throw Error("COG resolution must be at least 2");
    }
    std::vector<double> clips(output.terms.size(), 0.0);
    for (const auto& [term, level] : activated) {
        auto idx = output.term_index(term);
        if (!idx) {
            throw Error("output '" + output.name + "' has no term '" + term + "'");
        }
        clips[*idx] = std::max(clips[*idx], level);
    }
    const auto x = sample_points(output.universe, resolution);
    const auto mu = sample_terms(output, x);
    std::vector<double> env;
    const double score = cog_on_grid(x, mu, clips, env);
    if (std::isnan(score)) {
        throw EmptyActivation();
    }
    return score;
}

InferenceEngine::InferenceEngine(FuzzyModel model) : model_(std::move(model))
{
    auto diagnostics = validate_model(model_);
    if (has_errors(diagnostics)) {
        const auto first = std::find_if(diagnostics.begin(), diagnostics.end(),
                                        [](const Diagnostic& d) { return d.severity == Severity::Error; });
        std::string subject = first->location;
        throw SemanticError(std::move(subject), std::move(diagnostics));
    }

    degree_offset_.reserve(model_.inputs.size());
    for (const auto& var : model_.inputs) {
        degree_offset_.push_back(degree_count_);
        degree_count_ += var.terms.size();
    }
    referenced_.assign(model_.inputs.size(), false);

    rules_.reserve(model_.rules.size());
    for (const auto& rule : model_.rules) {
        CompiledRule compiled{clause_degree_.size(), rule.antecedent.size(), rule.weight,
                              *model_.output.term_index(rule.consequent.term)};
        for (const auto& clause : rule.antecedent) {
            std::size_t input = 0;
            while (model_.inputs[input].name != clause.variable) {
                ++input;
            }
            referenced_[input] = true;
            clause_degree_.push_back(degree_offset_[input] + *model_.inputs[input].term_index(clause.term));
        }
        rules_.push_back(compiled);
    }

    grid_x_ = sample_points(model_.output.universe, model_.settings.cog_resolution);
    grid_mu_ = sample_terms(model_.output, grid_x_);
    const Universe& u = model_.output.universe;
    fallback_ = model_.settings.default_value.value_or((u.lo + u.hi) / 2.0);
}

void InferenceEngine::fuzzify_into(std::span<const double> values, std::vector<double>& degrees, bool& clamped) const
{
    if (values.size() != model_.inputs.size()) {
        throw Error("expected " + std::to_string(model_.inputs.size()) + " input values, got " + std::to_string(values.size()));
    }
    degrees.resize(degree_count_);
    clamped = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const LinguisticVariable& var = model_.inputs[i];
        const double raw = values[i];
        if (!std::isfinite(raw)) {
            throw NotFinite(var.name);
        }
        const double x = std::clamp(raw, var.universe.lo, var.universe.hi);
        clamped = clamped || x != raw;
        double* out = degrees.data() + degree_offset_[i];
        for (std::size_t t = 0; t < var.terms.size(); ++t) {
            out[t] = membership(var.terms[t].shape, x);
        }
    }
}

double InferenceEngine::centroid(std::span<const double> clips) const
{
    thread_local std::vector<double> env;
    return cog_on_grid(grid_x_, grid_mu_, clips, env);
}

void InferenceEngine::evaluate(std::span<const double> values, Evaluation& out) const
{
    thread_local std::vector<double> degrees;
    thread_local std::vector<double> clips;
    fuzzify_into(values, degrees, out.clamped);
    clips.assign(model_.output.terms.size(), 0.0);
    out.fired.clear();
    for (std::size_t r = 0; r < rules_.size(); ++r) {
        const CompiledRule& rule = rules_[r];
        double s = 1.0;
        for (std::size_t k = 0; k < rule.count; ++k) {
            s = std::min(s, degrees[clause_degree_[rule.first + k]]);
        }
        s *= rule.weight;
        if (s > 0.0) {
            out.fired.emplace_back(r, s);
            clips[rule.output_term] = std::max(clips[rule.output_term], s);
        }
    }
    out.unruled = out.fired.empty();
    out.score = out.unruled ? std::numeric_limits<double>::quiet_NaN() : centroid(clips);
    if (std::isnan(out.score)) {
        out.unruled = true;
        out.score = fallback_;
    }
    out.category = category_for(model_.output, out.score);
}

CrispResult InferenceEngine::infer(const InputMap& inputs) const
{
    std::vector<std::string> missing;
    std::vector<double> values(model_.inputs.size());
    CrispResult result;
    for (std::size_t i = 0; i < model_.inputs.size(); ++i) {
        const LinguisticVariable& var = model_.inputs[i];
        auto it = inputs.find(var.name);
        if (it == inputs.end()) {
            if (referenced_[i]) {
                missing.push_back(var.name);
            }
            values[i] = var.universe.lo;
            continue;
        }
        result.memberships.push_back(fuzzify(var, it->second));
        values[i] = it->second;
    }
    if (!missing.empty()) {
        throw MissingVariable(std::move(missing));
    }
    Evaluation ev;
    evaluate(values, ev);
    if (ev.unruled) {
        if (ev.fired.empty()) {
            throw NoRuleFired();
        }
        throw EmptyActivation();
    }
    result.score = ev.score;
    result.category = ev.category;
    result.fired.reserve(ev.fired.size());
    for (const auto& [index, strength] : ev.fired) {
        result.fired.push_back({model_.rules[index].id, strength});
    }
    return result;
}

CrispResult infer(const FuzzyModel& model, const InputMap& inputs)
{
    return InferenceEngine(model).infer(inputs);
}

} // namespace cardiocep
