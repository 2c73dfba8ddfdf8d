#include "timebroker/monitor.hpp"

#include <cmath>
#include <stdexcept>

namespace timebroker {

MonitorReading monitor_step(Point2 robot, Point2 obstacle, double threshold_m)
{
    if (!std::isfinite(robot.x) || !std::isfinite(robot.y) || !std::isfinite(obstacle.x)
        || !std::isfinite(obstacle.y) || !std::isfinite(threshold_m)) {
        throw std::invalid_argument("monitor_step: non-finite input");
    }
    const double distance = std::hypot(robot.x - obstacle.x, robot.y - obstacle.y);
    return MonitorReading{distance, distance < threshold_m};
}

MonitorFmu::MonitorFmu(double safety_threshold_m) : threshold_(safety_threshold_m) {}

MonitorReading MonitorFmu::step(Point2 robot, Point2 obstacle)
{
    MonitorReading r = monitor_step(robot, obstacle, threshold_);
    stopped_ = stopped_ || r.stop;
    r.stop = stopped_;
    return r;
}

} // namespace timebroker
