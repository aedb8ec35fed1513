#pragma once

// Client side of the remote-policy wire protocol (JSON over HTTP):
//   POST /v1/generate  {"context","num_samples","temperature","max_tokens"}
//                      -> {"samples":[{"text","tokens","logprobs"}]}
//   POST /v1/update    {"items":[{"context","completion","advantage"}],"learning_rate"}
//                      -> {"loss"}   (501: inference-only server)
//   GET  /v1/health    -> {"status":"ok","model"}

#include <string>
#include <vector>

#include <json.hpp>

#include "hsrl/policy.hpp"

namespace hsrl::remote {

struct GenerateRequest
{
    std::string context;
    int num_samples = 1;
    double temperature = 1.0;
    int max_tokens = 64;
};

struct Sample
{
    std::string text;
    std::vector<std::string> tokens;
    std::vector<double> logprobs;
};

struct UpdateItem
{
    std::string context;
    std::string completion;
    double advantage = 0.0;
};

struct UpdateRequest
{
    std::vector<UpdateItem> items;
    double learning_rate = 1e-6;
};

struct Health
{
    std::string status;
    std::string model;
};

nlohmann::json to_json(const GenerateRequest& r);
nlohmann::json to_json(const UpdateRequest& r);
nlohmann::json to_json(const Sample& s);

/// Throws RemoteError on schema violations, including token/logprob
/// arrays of different lengths or positive log-probabilities.
std::vector<Sample> samples_from_json(const nlohmann::json& j);

class Client
{
public:
    /// base_url like "http://127.0.0.1:8000".
    explicit Client(std::string base_url, int timeout_seconds = 60);

    std::vector<Sample> generate(const GenerateRequest& req) const;
    /// Returns the server-reported loss; throws UpdateUnsupported on HTTP 501.
    double update(const UpdateRequest& req) const;
    Health health() const;

    const std::string& base_url() const { return base_url_; }

private:
    nlohmann::json post(const std::string& path, const nlohmann::json& body) const;

    std::string base_url_;
    int timeout_seconds_;
};

/// Policy backed by a remote language model. Samples whose text does not
/// parse into a state are kept with state = nullopt.
class RemotePolicy : public Policy
{
public:
    explicit RemotePolicy(Client client, int max_tokens = 64) : client_(std::move(client)), max_tokens_(max_tokens) {}

    std::vector<PolicyOutput> sample(const PolicyContext& ctx, int m, double temperature, Rng& rng) const override;

    const Client& client() const { return client_; }

private:
    Client client_;
    int max_tokens_;
};

}  // namespace hsrl::remote
