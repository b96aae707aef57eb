// Stand-in external detector for protocol tests. Reads one request per line
// and answers with a fixed detection.
//
//   echo_detector [--class NAME] [--box X1 Y1 X2 Y2] [--score S]
//                 [--mode echo|probe|wrong-id|garbage|die|unknown-class]
//
// probe: score encodes the pixel checksum so callers can verify transport.

#include <cstdlib>
#include <iostream>
#include <numeric>
#include <string>

#include <nlohmann/json.hpp>

#include "geocount/base64.hpp"

int main(int argc, char** argv) {
    std::string cls = "small-car", mode = "echo";
    double box[4] = {10, 20, 30, 40}, score = 0.9;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--class" && i + 1 < argc) cls = argv[++i];
        else if (a == "--score" && i + 1 < argc) score = std::atof(argv[++i]);
        else if (a == "--mode" && i + 1 < argc) mode = argv[++i];
        else if (a == "--box" && i + 4 < argc)
            for (double& v : box) v = std::atof(argv[++i]);
    }
    std::string line;
    while (std::getline(std::cin, line)) {
        if (mode == "die") return 3;
        if (mode == "garbage") {
            std::cout << "{not json\n" << std::flush;
            continue;
        }
        const auto req = nlohmann::json::parse(line);
        const auto px = geocount::base64_decode(req.at("pixels_b64").get<std::string>());
        const auto expect = static_cast<std::size_t>(req.at("width").get<int>()) * req.at("height").get<int>() *
                            req.at("channels").get<int>();
        if (px.size() != expect) return 4;
        double s = score;
        if (mode == "probe") s = (std::accumulate(px.begin(), px.end(), 0ULL) % 1000 + 1) / 1001.0;
        nlohmann::json det = {{"class", mode == "unknown-class" ? "flying-saucer" : cls},
                              {"x1", box[0]}, {"y1", box[1]}, {"x2", box[2]}, {"y2", box[3]}, {"score", s}};
        nlohmann::json resp = {{"id", mode == "wrong-id" ? "nope" : req.at("id").get<std::string>()},
                               {"detections", nlohmann::json::array({det})}};
        std::cout << resp.dump() << '\n' << std::flush;
    }
    return 0;
}
