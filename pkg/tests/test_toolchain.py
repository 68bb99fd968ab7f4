import os
import stat
from unittest import mock

from dmcodec._toolchain import *

from .utils import *


def _script(directory, name, body):
    path = os.path.join(directory, name)
    with open(path, "w") as f:
        f.write("#!/bin/sh\n" + body)
    os.chmod(path, os.stat(path).st_mode | stat.S_IEXEC)
    return path


class ToolchainTestCase(CodecTestCase):
    def test_env_var(self):
        self.assertEqual(tool_env_var("espeak-ng"), "DMCODEC_ESPEAK_NG")

    def test_override(self):
        path = _script(self.mkdtemp(), "fake", 'echo "$@"\n')
        with mock.patch.dict(os.environ, {"DMCODEC_FAKE_TOOL": path}):
            self.assertTrue(has_tool("fake-tool"))
            self.assertEqual(find_tool("fake-tool"), path)
            self.assertEqual(run_tool("fake-tool", ["a", "b"]), "a b\n")

    def test_missing(self):
        with mock.patch.dict(os.environ, {"DMCODEC_NO_SUCH_TOOL": "/nonexistent/tool"}):
            self.assertFalse(has_tool("no-such-tool"))
            with self.assertRaisesRegex(ToolNotFound,
                    r"^External program no-such-tool is not runnable at /nonexistent/tool "
                    r"\(set by DMCODEC_NO_SUCH_TOOL\)$"):
                find_tool("no-such-tool")
        with mock.patch.dict(os.environ, {"PATH": self.mkdtemp()}):
            with self.assertRaisesRegex(ToolNotFound,
                    r"^External program no-such-tool is not installed; add it to PATH or "
                    r"point DMCODEC_NO_SUCH_TOOL at it$"):
                find_tool("no-such-tool")

    def test_failure(self):
        path = _script(self.mkdtemp(), "fail", 'echo "bad voice" >&2\nexit 3\n')
        with mock.patch.dict(os.environ, {"DMCODEC_FAILING": path}):
            with self.assertRaisesRegex(ToolFailed, r"^failing exited with status 3: bad voice$"):
                run_tool("failing", [])
