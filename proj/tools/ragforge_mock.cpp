// Serves a scripted scenario file for manual end-to-end runs of `ragforge ask` and `ragforge remote`.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "ragforge/testing/mock_server.hpp"

int main(int argc, char** argv) {
    CLI::App app{"ragforge-mock: scripted stand-in for the chat, embedding and assistant APIs"};
    std::string scenario_path;
    std::string host = "127.0.0.1";
    int port = 8089;
    app.add_option("--scenario", scenario_path, "scenario JSON file");
    app.add_option("--host", host, "bind address");
    app.add_option("--port", port, "listen port");
    CLI11_PARSE(app, argc, argv);

    nlohmann::json scenario = nlohmann::json::object();
    if (!scenario_path.empty()) {
        std::ifstream in(scenario_path);
        if (!in) {
            std::cerr << "cannot read scenario '" << scenario_path << "'\n";
            return 2;
        }
        scenario = nlohmann::json::parse(in, nullptr, false);
        if (scenario.is_discarded()) {
            std::cerr << "scenario '" << scenario_path << "' is not valid JSON\n";
            return 2;
        }
    }
    std::cout << "serving on http://" << host << ":" << port << std::endl;
    ragforge::testing::MockServer::serve_forever(scenario, host, port);
    return 0;
}
