#include <doctest.h>

#include <atomic>
#include <functional>
#include <thread>

#include "hsrl/error.hpp"
#include "hsrl/remote.hpp"

#include <httplib.h>

using namespace hsrl;
using nlohmann::json;

namespace {

// Serves the three endpoints in-process; each handler can be swapped.
class FakeServer
{
public:
    std::function<json(const json&)> on_generate = [](const json& req) {
        json samples = json::array();
        for (int i = 0; i < req["num_samples"].get<int>(); ++i)
            samples.push_back({{"text", "(1,1)"}, {"tokens", {"(1,1)"}}, {"logprobs", {-0.5}}});
        return json{{"samples", samples}};
    };
    bool update_supported = true;
    json last_update;
    json last_generate;

    FakeServer()
    {
        server_.Post("/v1/generate", [this](const httplib::Request& req, httplib::Response& res) {
            last_generate = json::parse(req.body);
            res.set_content(on_generate(last_generate).dump(), "application/json");
        });
        server_.Post("/v1/update", [this](const httplib::Request& req, httplib::Response& res) {
            if (!update_supported) {
                res.status = 501;
                res.set_content(R"({"error":"inference only"})", "application/json");
                return;
            }
            last_update = json::parse(req.body);
            res.set_content(R"({"loss":0.25})", "application/json");
        });
        server_.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"status":"ok","model":"fake"})", "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~FakeServer()
    {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace

TEST_CASE("request serialisation")
{
    json g = remote::to_json(remote::GenerateRequest{"ctx", 8, 0.7, 32});
    CHECK(g == json{{"context", "ctx"}, {"num_samples", 8}, {"temperature", 0.7}, {"max_tokens", 32}});

    json u = remote::to_json(remote::UpdateRequest{{{"c", "(1,2)", -0.5}}, 1e-5});
    CHECK(u["items"][0]["completion"] == "(1,2)");
    CHECK(u["items"][0]["advantage"] == -0.5);
    CHECK(u["learning_rate"] == 1e-5);
}

TEST_CASE("sample schema violations")
{
    CHECK_THROWS_AS(remote::samples_from_json(json::object()), RemoteError);
    CHECK_THROWS_AS(remote::samples_from_json(json{{"samples", {{{"text", "x"}, {"tokens", {"a", "b"}}, {"logprobs", {-1.0}}}}}}),
                    RemoteError);
    CHECK_THROWS_AS(remote::samples_from_json(json{{"samples", {{{"text", "x"}, {"tokens", {"a"}}, {"logprobs", {0.5}}}}}}),
                    RemoteError);
    auto ok = remote::samples_from_json(json{{"samples", {{{"text", "x"}, {"tokens", {"a"}}, {"logprobs", {-1.0}}}}}});
    REQUIRE(ok.size() == 1);
    CHECK(ok[0].text == "x");
}

TEST_CASE("client round trips against a local server")
{
    FakeServer server;
    remote::Client client(server.url(), 5);

    auto h = client.health();
    CHECK(h.status == "ok");
    CHECK(h.model == "fake");

    auto samples = client.generate({"ctx", 3, 1.0, 16});
    CHECK(samples.size() == 3);
    CHECK(server.last_generate["max_tokens"] == 16);

    CHECK(client.update({{{"ctx", "(1,1)", 1.0}}, 1e-6}) == doctest::Approx(0.25));
    CHECK(server.last_update["items"].size() == 1);

    server.update_supported = false;
    CHECK_THROWS_AS(client.update({{{"ctx", "(1,1)", 1.0}}, 1e-6}), UpdateUnsupported);
}

TEST_CASE("remote policy keeps unparseable samples")
{
    FakeServer server;
    server.on_generate = [](const json&) {
        return json{{"samples",
                     {{{"text", "(1,1)"}, {"tokens", {"(1", ",1)"}}, {"logprobs", {-0.2, -0.4}}},
                      {{"text", "(a,b)"}, {"tokens", {"(a,b)"}}, {"logprobs", {-3.0}}}}}};
    };
    remote::RemotePolicy policy(remote::Client(server.url(), 5), 16);
    Task task = make_grid_task(GridMap(4, 4, {0, 0}, {3, 3}));
    Rng rng(0);
    auto out = policy.sample(make_context(task, {task.start()}), 2, 1.0, rng);
    REQUIRE(out.size() == 2);
    REQUIRE(out[0].state);
    CHECK(std::get<Position>(*out[0].state) == Position{1, 1});
    CHECK(avg_log_likelihood(out[0]) == doctest::Approx(-0.3));
    CHECK_FALSE(out[1].state);
    CHECK(out[1].raw_text == "(a,b)");
    CHECK(server.last_generate["context"] == make_context(task, {task.start()}).serialize());
}

TEST_CASE("misaligned server output and dead endpoints raise RemoteError")
{
    FakeServer server;
    server.on_generate = [](const json&) {
        return json{{"samples", {{{"text", "(1,1)"}, {"tokens", {"(1", ",1)"}}, {"logprobs", {-0.2}}}}}};
    };
    remote::Client client(server.url(), 5);
    CHECK_THROWS_AS(client.generate({"ctx", 1, 1.0, 16}), RemoteError);

    remote::Client dead("http://127.0.0.1:1", 1);
    CHECK_THROWS_AS(dead.health(), RemoteError);
}
