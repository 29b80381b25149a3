#!/usr/bin/env python3
"""Regenerate the bundled replay fixtures.

The weather fixture records a two-iteration conversation: the first reply's
test fails with a null return from the weather-data method, the repair reply
passes. Exchange 2's request_prompt is the actual repair prompt the loop
assembles, captured by running the real pipeline, so strict replay
byte-checks prompt assembly end to end.

Run from the repo root: python tools/gen_fixtures.py
"""
from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "src"))

from loopsmith import toolchain  # noqa: E402
from loopsmith.diagnostics import DistillRules, classify_outcome  # noqa: E402
from loopsmith.extract import extract_tagged  # noqa: E402
from loopsmith.prompts import PromptSpec, TemplateVersion, build_initial_prompt, build_repair_prompt  # noqa: E402
from loopsmith.resources import synthetic_toolchain_path  # noqa: E402

DATA_DIR = REPO_ROOT / "src" / "loopsmith" / "data" / "fixtures"

WEATHER_REQUEST = (
    "Weather Forecast App: A simple command line based weather forecast app. "
    "When a user enters a city name, it displays the current weather information "
    "for that city. Make an HTTP request to an external API (e.g. OpenWeatherMap), "
    "parse and display the JSON response."
)

WEATHER_REPLY_1 = """[CODE]
import java.io.IOException;
import java.net.HttpURLConnection;
import java.net.URL;
import java.util.Scanner;

public class WeatherApp {
    public static String getWeatherData(String city) {
        try {
            URL url = new URL("https://api.openweathermap.org/data/2.5/weather?q=" + city);
            HttpURLConnection connection = (HttpURLConnection) url.openConnection();
            if (connection.getResponseCode() != 200) {
                return null;
            }
            Scanner scanner = new Scanner(connection.getInputStream());
            StringBuilder body = new StringBuilder();
            while (scanner.hasNextLine()) {
                body.append(scanner.nextLine());
            }
            scanner.close();
            return body.toString();
        } catch (IOException e) {
            return null;
        }
    }

    public static void main(String[] args) {
        Scanner input = new Scanner(System.in);
        System.out.print("Enter a city name: ");
        String city = input.nextLine();
        System.out.println(getWeatherData(city));
        input.close();
    }
}
[/CODE]
[TEST]
import org.junit.jupiter.api.Test;
import static org.junit.jupiter.api.Assertions.assertNotNull;

public class WeatherAppTest {
    // LOOPFAKE:fail testGetWeatherData getWeatherData method returned null

    @Test
    public void testGetWeatherData() {
        assertNotNull(WeatherApp.getWeatherData("London"));
    }
}
[/TEST]
The generation finished at: [TIME]"""

WEATHER_REPLY_2 = """[CODE]
import java.io.IOException;
import java.net.HttpURLConnection;
import java.net.URL;
import java.util.Scanner;

public class WeatherApp {
    public static class WeatherDataException extends RuntimeException {
        public WeatherDataException(String message) {
            super(message);
        }
    }

    public static String getWeatherData(String city) {
        try {
            URL url = new URL("https://api.openweathermap.org/data/2.5/weather?q=" + city);
            HttpURLConnection connection = (HttpURLConnection) url.openConnection();
            if (connection.getResponseCode() != 200) {
                throw new WeatherDataException("request failed with status " + connection.getResponseCode());
            }
            Scanner scanner = new Scanner(connection.getInputStream());
            StringBuilder body = new StringBuilder();
            while (scanner.hasNextLine()) {
                body.append(scanner.nextLine());
            }
            scanner.close();
            return body.toString();
        } catch (IOException e) {
            throw new WeatherDataException("could not reach the weather service: " + e.getMessage());
        }
    }

    public static void main(String[] args) {
        Scanner input = new Scanner(System.in);
        System.out.print("Enter a city name: ");
        String city = input.nextLine();
        System.out.println(getWeatherData(city));
        input.close();
    }
}
[/CODE]
[TEST]
import org.junit.jupiter.api.Test;
import static org.junit.jupiter.api.Assertions.assertThrows;

public class WeatherAppTest {
    // LOOPFAKE:pass testGetWeatherDataThrowsOnBadCity

    @Test
    public void testGetWeatherDataThrowsOnBadCity() {
        assertThrows(WeatherApp.WeatherDataException.class,
                () -> WeatherApp.getWeatherData("NoSuchCityAnywhere"));
    }
}
[/TEST]
The generation finished at: [TIME]"""

TETRIS_REPLY = """[CODE]
public class Tetris {
    public static void main(String[] args) {
        System.out.println("text-based tetris placeholder");
    }
}
[/CODE]
[TEST]
public class TetrisTest {
    // LOOPFAKE:pass boardInitialises
}
[/TEST]"""


def wire_escape(plain: str) -> str:
    """One JSON-string escaping pass; file-level escaping is applied on dump."""
    return json.dumps(plain, ensure_ascii=False)[1:-1]


def capture_first_iteration_excerpt() -> str:
    """Run the real pipeline over reply 1 to capture the distilled excerpt."""
    config = toolchain.load_toolchain_config(synthetic_toolchain_path())
    artifacts = extract_tagged(WEATHER_REPLY_1)
    with tempfile.TemporaryDirectory() as root:
        workspace = toolchain.materialize(root, artifacts, config)
        compile_result = toolchain.compile(workspace, config)
        assert compile_result.exit_code == 0, compile_result.stderr
        test_result = toolchain.run_tests(workspace, config, artifacts.test_class_name)
    outcome = classify_outcome(
        compile_result,
        test_result,
        rules=DistillRules.from_config(config.diagnostics),
        class_names=(artifacts.code_class_name, artifacts.test_class_name),
    )
    assert outcome.kind.value == "TEST_FAILURE", outcome
    return outcome.excerpt


def build_weather_fixture() -> dict:
    spec = PromptSpec(user_request=WEATHER_REQUEST, template_version=TemplateVersion.V5_FINAL)
    prompt_1 = build_initial_prompt(spec)
    artifacts_1 = extract_tagged(WEATHER_REPLY_1)
    excerpt = capture_first_iteration_excerpt()
    prompt_2 = build_repair_prompt(artifacts_1.code, artifacts_1.test_code, excerpt)
    return {
        "strict": True,
        "exchanges": [
            {
                "request_prompt": prompt_1,
                "response": {
                    "content": wire_escape(WEATHER_REPLY_1),
                    "finish_reason": "stop",
                    "usage": {"prompt_tokens": 182, "completion_tokens": 563, "total_tokens": 745},
                },
            },
            {
                "request_prompt": prompt_2,
                "response": {
                    "content": wire_escape(WEATHER_REPLY_2),
                    "finish_reason": "stop",
                    "usage": {"prompt_tokens": 901, "completion_tokens": 648, "total_tokens": 1549},
                },
            },
        ],
    }


def build_token_usage_fixture() -> dict:
    return {
        "strict": True,
        "exchanges": [
            {
                "request_prompt": "Create a text-based Tetris",
                "response": {
                    "content": wire_escape(TETRIS_REPLY),
                    "finish_reason": "stop",
                    "usage": {"prompt_tokens": 190, "completion_tokens": 412, "total_tokens": 602},
                },
            },
            {
                "request_prompt": "Please create a text-based Tetris",
                "response": {
                    "content": wire_escape(TETRIS_REPLY),
                    "finish_reason": "stop",
                    "usage": {"prompt_tokens": 200, "completion_tokens": 412, "total_tokens": 612},
                },
            },
        ],
    }


def main() -> None:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    weather = DATA_DIR / "weather_two_loop.json"
    weather.write_text(json.dumps(build_weather_fixture(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    tokens = DATA_DIR / "token_usage.json"
    tokens.write_text(json.dumps(build_token_usage_fixture(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    print(f"wrote {weather}")
    print(f"wrote {tokens}")


if __name__ == "__main__":
    main()
