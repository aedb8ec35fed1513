#include "hsrl/remote.hpp"

#include <httplib.h>

#include "hsrl/error.hpp"

namespace hsrl::remote {

using nlohmann::json;

json to_json(const GenerateRequest& r)
{
    return {{"context", r.context},
            {"num_samples", r.num_samples},
            {"temperature", r.temperature},
            {"max_tokens", r.max_tokens}};
}

json to_json(const UpdateRequest& r)
{
    json items = json::array();
    for (const UpdateItem& it : r.items)
        items.push_back({{"context", it.context}, {"completion", it.completion}, {"advantage", it.advantage}});
    return {{"items", items}, {"learning_rate", r.learning_rate}};
}

json to_json(const Sample& s)
{
    return {{"text", s.text}, {"tokens", s.tokens}, {"logprobs", s.logprobs}};
}

std::vector<Sample> samples_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("samples") || !j["samples"].is_array())
        throw RemoteError("generate response lacks a 'samples' array");
    std::vector<Sample> out;
    for (const json& s : j["samples"]) {
        try {
            Sample sample{s.at("text").get<std::string>(), s.at("tokens").get<std::vector<std::string>>(),
                          s.at("logprobs").get<std::vector<double>>()};
            if (sample.tokens.size() != sample.logprobs.size())
                throw RemoteError("tokens and logprobs differ in length");
            for (double lp : sample.logprobs)
                if (!(lp <= 0.0))
                    throw RemoteError("log-probabilities must be finite and <= 0");
            out.push_back(std::move(sample));
        } catch (const json::exception& e) {
            throw RemoteError(std::string("malformed sample: ") + e.what());
        }
    }
    return out;
}

Client::Client(std::string base_url, int timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds)
{
    while (!base_url_.empty() && base_url_.back() == '/')
        base_url_.pop_back();
}

json Client::post(const std::string& path, const json& body) const
{
    httplib::Client cli(base_url_);
    cli.set_read_timeout(timeout_seconds_, 0);
    cli.set_connection_timeout(timeout_seconds_, 0);
    auto res = cli.Post(path, body.dump(), "application/json");
    if (!res)
        throw RemoteError("POST " + base_url_ + path + " failed: " + httplib::to_string(res.error()));
    if (res->status == 501)
        throw UpdateUnsupported("server does not support " + path);
    if (res->status != 200)
        throw RemoteError("POST " + path + " returned HTTP " + std::to_string(res->status));
    auto parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded())
        throw RemoteError("POST " + path + " returned invalid JSON");
    return parsed;
}

std::vector<Sample> Client::generate(const GenerateRequest& req) const
{
    return samples_from_json(post("/v1/generate", to_json(req)));
}

double Client::update(const UpdateRequest& req) const
{
    json j = post("/v1/update", to_json(req));
    if (!j.contains("loss") || !j["loss"].is_number())
        throw RemoteError("update response lacks a numeric 'loss'");
    return j["loss"].get<double>();
}

Health Client::health() const
{
    httplib::Client cli(base_url_);
    cli.set_read_timeout(timeout_seconds_, 0);
    auto res = cli.Get("/v1/health");
    if (!res)
        throw RemoteError("GET /v1/health failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw RemoteError("GET /v1/health returned HTTP " + std::to_string(res->status));
    auto j = json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("status"))
        throw RemoteError("health response malformed");
    return {j["status"].get<std::string>(), j.value("model", std::string{})};
}

std::vector<PolicyOutput> RemotePolicy::sample(const PolicyContext& ctx, int m, double temperature, Rng&) const
{
    GenerateRequest req{ctx.serialize(), m, temperature, max_tokens_};
    std::vector<PolicyOutput> out;
    for (Sample& s : client_.generate(req)) {
        PolicyOutput o;
        o.state = parse_state(s.text, *ctx.task);
        o.raw_text = std::move(s.text);
        o.tokens = std::move(s.tokens);
        o.logprobs = std::move(s.logprobs);
        out.push_back(std::move(o));
    }
    if (out.empty())
        throw EmptyCandidateSet("remote policy returned no samples");
    return out;
}

}  // namespace hsrl::remote
